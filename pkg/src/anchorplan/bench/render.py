"""SVG rendering of one planned scene.

World coordinates map to SVG pixels through ``Viewport``: x grows right, y is
flipped so that world "up" is screen "up". The transform parameters are stored
as ``data-*`` attributes on the root element so a reader can invert it.
"""

import math
import xml.etree.ElementTree as ET
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from anchorplan.anchors.vocab import Provenance, StaticVocabulary
from anchorplan.core.traj import to_global
from anchorplan.diffusion.sampler import PlanResult
from anchorplan.typ import FloatArray
from anchorplan.utils.misc import fmt_float
from anchorplan.world.geometry import obstacle_corners
from anchorplan.world.models import LightState, Scenario

SVG_NS = "http://www.w3.org/2000/svg"

STATIC_COLOR = "#9e9e9e"
DYNAMIC_COLORS = ("#e6194b", "#f58231", "#4363d8", "#42d4f4")
GROUND_TRUTH_COLOR = "#2ca02c"
SELECTED_COLOR = "#7b2cbf"
_LIGHT_COLORS = {LightState.RED: "#d62728", LightState.GREEN: "#2ca02c"}


@dataclass(frozen=True)
class Viewport:
    """``svg = ((x - x_min) * scale + margin, (y_max - y) * scale + margin)``."""

    x_min: float
    y_max: float
    scale: float
    margin: float
    width: float
    height: float

    @classmethod
    def fit(cls, points: FloatArray, size: float = 800.0, margin: float = 20.0) -> "Viewport":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = max(float(np.max(hi - lo)), 1e-6)
        scale = (size - 2 * margin) / span
        w, h = (hi - lo) * scale + 2 * margin
        return cls(float(lo[0]), float(hi[1]), scale, margin, float(w), float(h))

    def to_svg(self, xy: FloatArray) -> FloatArray:
        p = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        return np.column_stack(
            [
                (p[:, 0] - self.x_min) * self.scale + self.margin,
                (self.y_max - p[:, 1]) * self.scale + self.margin,
            ]
        )

    def from_svg(self, uv: FloatArray) -> FloatArray:
        p = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
        return np.column_stack(
            [
                (p[:, 0] - self.margin) / self.scale + self.x_min,
                self.y_max - (p[:, 1] - self.margin) / self.scale,
            ]
        )

    def attributes(self) -> dict[str, str]:
        return {
            "data-x-min": fmt_float(self.x_min),
            "data-y-max": fmt_float(self.y_max),
            "data-scale": fmt_float(self.scale),
            "data-margin": fmt_float(self.margin),
        }

    @classmethod
    def from_element(cls, root: ET.Element) -> "Viewport":
        return cls(
            float(root.attrib["data-x-min"]),
            float(root.attrib["data-y-max"]),
            float(root.attrib["data-scale"]),
            float(root.attrib["data-margin"]),
            float(root.attrib["width"]),
            float(root.attrib["height"]),
        )


def path_data(uv: FloatArray, closed: bool = False) -> str:
    parts = [
        f"{'M' if i == 0 else 'L'}{fmt_float(u)},{fmt_float(v)}"
        for i, (u, v) in enumerate(uv)
    ]
    return " ".join(parts) + (" Z" if closed else "")


def parse_path(d: str) -> FloatArray:
    """Coordinates of an ``M``/``L`` path as written by ``path_data``."""
    pts = [
        tuple(float(c) for c in token[1:].split(","))
        for token in d.split()
        if token[0] in "ML"
    ]
    return np.array(pts, dtype=np.float64).reshape(-1, 2)


def _path(
    parent: ET.Element, vp: Viewport, xy: FloatArray, cls: str, closed: bool = False,
    **style: str,
) -> ET.Element:
    attrs = {"d": path_data(vp.to_svg(xy), closed), "class": cls, "fill": "none"}
    attrs.update({k.replace("_", "-"): v for k, v in style.items()})
    return ET.SubElement(parent, "path", attrs)


def _extent(s: Scenario, trajectories: Iterable[FloatArray]) -> FloatArray:
    pts = [np.asarray(s.drivable_area)]
    pts.extend(np.asarray(t).reshape(-1, 2) for t in trajectories)
    pts.append(np.array([[s.ego_start.x, s.ego_start.y]]))
    return np.vstack(pts)


def _svg_root(vp: Viewport, extra: dict[str, str]) -> ET.Element:
    return ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "width": fmt_float(vp.width),
            "height": fmt_float(vp.height),
            "viewBox": f"0 0 {fmt_float(vp.width)} {fmt_float(vp.height)}",
            **extra,
            **vp.attributes(),
        },
    )


def _ego_marker(root: ET.Element, vp: Viewport, x: float, y: float) -> None:
    u, v = vp.to_svg(np.array([[x, y]]))[0]
    ET.SubElement(
        root, "circle",
        {"class": "ego", "cx": fmt_float(u), "cy": fmt_float(v), "r": "4",
         "fill": "#000000"},
    )


def render_plan(s: Scenario, result: PlanResult, size: float = 800.0) -> str:
    """Map, obstacles, every anchor, the expert and the selected plan as SVG text."""
    anchors = [to_global(a, s.ego_start, result.dt).xy for a in result.anchors]
    selected = to_global(result.candidates[result.selected], s.ego_start, result.dt).xy
    vp = Viewport.fit(_extent(s, [*anchors, selected, s.expert.xy]), size)

    root = _svg_root(vp, {"data-scenario": s.id})
    ET.SubElement(root, "title").text = f"{s.id} ({s.template.value}, {s.command.value})"

    scene = ET.SubElement(root, "g", {"id": "scene"})
    _path(scene, vp, s.drivable_area, "drivable", closed=True, fill="#f2f2f2",
          stroke="#bdbdbd")
    for lane in s.lanes:
        _path(scene, vp, lane.centerline, "lane", stroke="#cccccc",
              stroke_dasharray="4 4")
    if s.traffic_light is not None:
        _path(scene, vp, np.array(s.traffic_light.stop_line), "stop-line",
              stroke=_LIGHT_COLORS[s.traffic_light.state], stroke_width="3")
    for o in s.obstacles:
        _path(scene, vp, obstacle_corners(o, 0.0), "obstacle", closed=True,
              fill="#616161")

    group = ET.SubElement(root, "g", {"id": "anchors"})
    dynamic_seen = 0
    for xy, tag in zip(anchors, result.provenance, strict=True):
        if tag == Provenance.DYNAMIC:
            color = DYNAMIC_COLORS[dynamic_seen % len(DYNAMIC_COLORS)]
            dynamic_seen += 1
        else:
            color = STATIC_COLOR
        _path(group, vp, xy, f"anchor {tag.value}", stroke=color, stroke_width="1")

    _path(root, vp, s.expert.xy, "ground-truth", stroke=GROUND_TRUTH_COLOR,
          stroke_width="2")
    _path(root, vp, selected, "selected", stroke=SELECTED_COLOR, stroke_width="2.5")

    _ego_marker(root, vp, s.ego_start.x, s.ego_start.y)
    text = ET.tostring(root, encoding="unicode")
    if not all(math.isfinite(c) for c in vp.to_svg(selected).ravel()):
        raise ValueError("non-finite coordinates in the rendered plan")
    return text + "\n"


def render_vocabulary(vocab: StaticVocabulary, size: float = 800.0) -> str:
    """The static anchors in the ego start frame, ego at the origin facing +x."""
    anchors = [a.reshape(-1, 2) for a in vocab.anchors]
    vp = Viewport.fit(np.vstack([np.zeros((1, 2)), *anchors]), size)
    root = _svg_root(vp, {"data-vocab-size": str(vocab.k)})
    ET.SubElement(root, "title").text = f"static vocabulary ({vocab.k} anchors)"
    group = ET.SubElement(root, "g", {"id": "anchors"})
    for xy in anchors:
        _path(group, vp, xy, f"anchor {Provenance.STATIC.value}", stroke=STATIC_COLOR,
              stroke_width="1.5")
    _ego_marker(root, vp, 0.0, 0.0)
    return ET.tostring(root, encoding="unicode") + "\n"
