from dataclasses import replace

import numpy as np
import pytest
from pydantic import ValidationError

from anchorplan.core.traj import ade, ade_many
from anchorplan.decoder import (
    ALL_STREAMS,
    DecoderConfig,
    DecoderModel,
    Stream,
    decode_anchors,
    decoder_loss,
    encode_streams,
    pool_context,
    smoothed_ade,
    stream_prefixes,
)
from anchorplan.errors import ShapeError
from anchorplan.nn import Graph, Tensor2, gradient_check
from anchorplan.world import PerceptionBundle, Template, extract_perception, generate_scenario


@pytest.fixture(scope="module")
def bundle() -> PerceptionBundle:
    s = generate_scenario(3, Template.LEAD_VEHICLE)
    return replace(
        extract_perception(s),
        object_tokens=np.random.default_rng(0).normal(size=(3, 8)),
    )


@pytest.fixture(scope="module")
def small_cfg() -> DecoderConfig:
    return DecoderConfig(embed=8, heads=2, head_hidden=(8,), seed=4)


class TestStreams:
    def test_token_layout(self, bundle: PerceptionBundle) -> None:
        m = DecoderModel()
        tokens = encode_streams(Graph(), bundle, m)
        assert tokens.count(Stream.BEV) == 16
        assert tokens.count(Stream.OBJECTS) == 3
        assert tokens.count(Stream.MAP) == len(bundle.map_tokens)
        assert tokens.count(Stream.COMMAND) == 1
        assert tokens.values is not None
        assert tokens.values.shape == (len(tokens), 32)

    def test_disabled_streams_are_skipped(self, bundle: PerceptionBundle) -> None:
        m = DecoderModel(DecoderConfig(streams=(Stream.MAP, Stream.COMMAND)))
        tokens = encode_streams(Graph(), bundle, m)
        assert set(tokens.streams) == {Stream.MAP, Stream.COMMAND}

    def test_stream_set_is_ordered(self) -> None:
        cfg = DecoderConfig(streams=(Stream.COMMAND, Stream.BEV))
        assert cfg.streams == (Stream.BEV, Stream.COMMAND)
        with pytest.raises(ValidationError):
            DecoderConfig(streams=(Stream.MAP, Stream.MAP))

    def test_no_streams_still_decodes(self, bundle: PerceptionBundle) -> None:
        m = DecoderModel(DecoderConfig(streams=()))
        g = Graph()
        tokens = encode_streams(g, bundle, m)
        assert tokens.values is None
        anchors, weights = decode_anchors(g, tokens, m)
        assert anchors.shape == (4, 16)
        assert weights == []
        assert pool_context(g, tokens, m).shape == (1, 32)

    def test_width_validation(self, bundle: PerceptionBundle) -> None:
        bad = replace(bundle, object_tokens=np.zeros((2, 5)))
        with pytest.raises(ShapeError):
            encode_streams(Graph(), bad, DecoderModel())

    def test_prefixes(self) -> None:
        prefixes = stream_prefixes()
        assert len(prefixes) == 5
        assert prefixes[0] == ()
        assert prefixes[-1] == ALL_STREAMS
        assert all(prefixes[i] == prefixes[i + 1][:i] for i in range(4))


class TestDecoder:
    def test_output_shapes(self, bundle: PerceptionBundle) -> None:
        m = DecoderModel()
        g = Graph()
        tokens = encode_streams(g, bundle, m)
        anchors, weights = decode_anchors(g, tokens, m)
        assert anchors.shape == (4, 16)
        assert len(weights) == 4
        assert all(w.shape == (4, len(tokens)) for w in weights)
        assert np.all(np.isfinite(anchors.data))

    def test_object_order_does_not_matter(self, bundle: PerceptionBundle) -> None:
        """Object tokens carry no position, so attention is permutation invariant."""
        m = DecoderModel()
        flipped = replace(bundle, object_tokens=bundle.object_tokens[::-1].copy())
        g = Graph()
        a, _ = decode_anchors(g, encode_streams(g, bundle, m), m)
        b, _ = decode_anchors(g, encode_streams(g, flipped, m), m)
        assert np.allclose(a.data, b.data, atol=1e-12)

    def test_deterministic_init(self) -> None:
        a, b = DecoderModel(DecoderConfig(seed=9)), DecoderModel(DecoderConfig(seed=9))
        for (_, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters(), strict=True):
            assert np.array_equal(pa.data, pb.data)


class TestLoss:
    def test_smoothed_ade_close_to_ade(self) -> None:
        rng = np.random.default_rng(2)
        trajs, target = rng.normal(size=(3, 16)), rng.normal(size=16)
        g = Graph()
        got = smoothed_ade(g, g.constant(trajs), target).data[:, 0]
        assert got == pytest.approx(ade_many(trajs, target), abs=1e-5)

    def test_winner_takes_all(
        self, bundle: PerceptionBundle, small_cfg: DecoderConfig
    ) -> None:
        m = DecoderModel(small_cfg)
        g = Graph()
        anchors, _ = decode_anchors(g, encode_streams(g, bundle, m), m)
        expert = anchors.data[2] + 0.05
        loss = decoder_loss(g, anchors, expert, gamma=0.0)
        assert loss.item() == pytest.approx(ade(anchors.data[2], expert), abs=1e-5)
        m.zero_grad()
        g.backward(loss)
        for j, head in enumerate(m.traj_heads):
            grads = [np.abs(p.grad).sum() for p in head.parameters()]
            assert (sum(grads) > 0) == (j == 2)

    def test_gradients_match_finite_differences(
        self, bundle: PerceptionBundle, small_cfg: DecoderConfig
    ) -> None:
        m = DecoderModel(small_cfg)
        expert = np.linspace(0.0, 30.0, 16)

        def loss(g: Graph) -> Tensor2:
            tokens = encode_streams(g, bundle, m)
            anchors, _ = decode_anchors(g, tokens, m)
            ctx = pool_context(g, tokens, m)
            return g.add(decoder_loss(g, anchors, expert), g.mean_all(g.mul(ctx, ctx)))

        err = gradient_check(loss, m.parameters(), 50, np.random.default_rng(0))
        assert err < 1e-4
