from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from anchorplan.core.traj import Trajectory
from anchorplan.utils.misc import fmt_float
from anchorplan.world.models import Scenario

from .models import (
    COLUMN_NAMES,
    PENALTIES,
    REPORT_ORDER,
    WEIGHTED,
    EpdmsConfig,
    EpdmsReport,
    SubScoreId,
)
from .subscores import all_subscores


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def filter(m_agent: float, m_human: float) -> float:  # noqa: A001
    """1 when the human reference itself scores 0 on the rule, else the agent score."""
    _check_unit("agent score", m_agent)
    _check_unit("human score", m_human)
    return 1.0 if m_human == 0.0 else float(m_agent)


def filtered_scores(
    agent: Mapping[SubScoreId, float], human: Mapping[SubScoreId, float]
) -> dict[SubScoreId, float]:
    if missing := [m.value for m in SubScoreId if m not in agent or m not in human]:
        raise ValueError(f"missing sub-scores {missing}")
    return {m: filter(agent[m], human[m]) for m in SubScoreId}


def epdms(
    agent: Mapping[SubScoreId, float],
    human: Mapping[SubScoreId, float],
    cfg: EpdmsConfig | None = None,
) -> float:
    """Product of filtered penalties times the weighted mean of the filtered rest."""
    cfg = cfg or EpdmsConfig()
    f = filtered_scores(agent, human)
    penalty = float(np.prod([f[m] for m in PENALTIES]))
    total_weight = sum(cfg.weights[m] for m in WEIGHTED)
    weighted = sum(cfg.weights[m] * f[m] for m in WEIGHTED) / total_weight
    return penalty * weighted


def evaluate(
    t: Trajectory, s: Scenario, cfg: EpdmsConfig | None = None
) -> EpdmsReport:
    """Score ``t`` on ``s`` with the scenario's expert as the human reference."""
    cfg = cfg or EpdmsConfig()
    agent = all_subscores(t, s, cfg)
    human = all_subscores(s.expert, s, cfg)
    return EpdmsReport(
        scenario_id=s.id,
        agent=agent,
        human=human,
        filtered=filtered_scores(agent, human),
        epdms=epdms(agent, human, cfg),
        template=s.template.value,
    )


@dataclass(frozen=True)
class CorpusScore:
    epdms: float
    subscores: Mapping[SubScoreId, float]  # mean of the agent's raw sub-scores
    count: int


def corpus_epdms(reports: Sequence[EpdmsReport]) -> CorpusScore:
    if not reports:
        raise ValueError("corpus_epdms needs at least one report")
    return CorpusScore(
        epdms=float(np.mean([r.epdms for r in reports])),
        subscores={m: float(np.mean([r.agent[m] for r in reports])) for m in SubScoreId},
        count=len(reports),
    )


HEADER: tuple[str, ...] = tuple(COLUMN_NAMES[m] for m in REPORT_ORDER) + ("EPDMS",)


def report_row(r: EpdmsReport) -> list[str]:
    return [fmt_float(r.agent[m]) for m in REPORT_ORDER] + [fmt_float(r.epdms)]


def summary_row(c: CorpusScore) -> list[str]:
    return [fmt_float(c.subscores[m]) for m in REPORT_ORDER] + [fmt_float(c.epdms)]
