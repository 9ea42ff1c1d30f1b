from collections.abc import Iterator, Sequence

import numpy as np

from anchorplan.errors import ShapeError
from anchorplan.typ import FloatArray

from .tensor import Graph, Parameter, Tensor2, scaled_dot_attention


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> FloatArray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Module:
    """Parameter container; attributes are traversed in assignment order."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            full = f"{prefix}{name}"
            if isinstance(value, Parameter):
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{full}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Parameter):
                        yield f"{full}.{i}", item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> dict[str, FloatArray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}


class Linear(Module):
    def __init__(self, fan_in: int, fan_out: int, rng: np.random.Generator) -> None:
        self.weight = Parameter(xavier_uniform(rng, fan_in, fan_out), "weight")
        self.bias = Parameter(np.zeros((1, fan_out)), "bias")

    def __call__(self, g: Graph, x: Tensor2) -> Tensor2:
        return g.add_bias(g.matmul(x, self.weight), self.bias)


class LayerNorm(Module):
    def __init__(self, width: int) -> None:
        self.gamma = Parameter(np.ones((1, width)), "gamma")
        self.beta = Parameter(np.zeros((1, width)), "beta")

    def __call__(self, g: Graph, x: Tensor2) -> Tensor2:
        return g.layer_norm(x, self.gamma, self.beta)


class MLP(Module):
    """Linear layers with SiLU between them; the output layer is linear."""

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator) -> None:
        if len(sizes) < 2:
            raise ShapeError("MLP needs at least an input and an output size")
        self.layers = [
            Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:], strict=True)
        ]

    def __call__(self, g: Graph, x: Tensor2) -> Tensor2:
        for i, layer in enumerate(self.layers):
            x = layer(g, x)
            if i < len(self.layers) - 1:
                x = g.silu(x)
        return x


class MultiHeadAttention(Module):
    def __init__(self, width: int, heads: int, rng: np.random.Generator) -> None:
        if width % heads:
            raise ShapeError(f"width {width} is not divisible by {heads} heads")
        self.heads = heads
        self.q = Linear(width, width, rng)
        self.k = Linear(width, width, rng)
        self.v = Linear(width, width, rng)
        self.out = Linear(width, width, rng)

    def __call__(
        self, g: Graph, queries: Tensor2, tokens: Tensor2
    ) -> tuple[Tensor2, list[FloatArray]]:
        attended, weights = scaled_dot_attention(
            g, self.q(g, queries), self.k(g, tokens), self.v(g, tokens), self.heads
        )
        return self.out(g, attended), weights


def extract_patches(raster: FloatArray, patch: int) -> FloatArray:
    """(C, G, G) raster -> (num_patches, C * patch * patch), patches row-major."""
    c, gx, gy = raster.shape
    if gx % patch or gy % patch:
        raise ShapeError(f"grid {gx}x{gy} is not divisible by patch {patch}")
    nx, ny = gx // patch, gy // patch
    blocks = raster.reshape(c, nx, patch, ny, patch).transpose(1, 3, 0, 2, 4)
    return blocks.reshape(nx * ny, c * patch * patch)


class PatchEmbed(Module):
    """Strided, non-overlapping patch projection with a learned position table."""

    def __init__(
        self, channels: int, grid: int, patch: int, width: int, rng: np.random.Generator
    ) -> None:
        if grid % patch:
            raise ShapeError(f"grid {grid} is not divisible by patch {patch}")
        self.patch = patch
        self.num_patches = (grid // patch) ** 2
        self.proj = Linear(channels * patch * patch, width, rng)
        self.position = Parameter(
            rng.normal(0.0, 0.02, size=(self.num_patches, width)), "position"
        )

    def __call__(self, g: Graph, raster: FloatArray) -> Tensor2:
        patches = g.constant(extract_patches(np.asarray(raster), self.patch), "patches")
        return g.add(self.proj(g, patches), self.position)
