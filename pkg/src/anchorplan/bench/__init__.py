from .ablation import AblationAxis, heads_table, steps_table, stream_label
from .evaluate import (
    ScenarioPlan,
    evaluate_scenarios,
    mean_extra,
    per_template,
    plan_scenario,
)
from .pipeline import (
    ScenarioSpec,
    build_static_vocab,
    corpus_hash,
    generate_dataset,
    local_expert,
    scenario_specs,
    train_models,
    training_samples,
)
from .render import Viewport, parse_path, render_plan, render_vocabulary

__all__ = [
    "AblationAxis",
    "ScenarioPlan",
    "ScenarioSpec",
    "Viewport",
    "build_static_vocab",
    "corpus_hash",
    "evaluate_scenarios",
    "generate_dataset",
    "heads_table",
    "local_expert",
    "mean_extra",
    "parse_path",
    "per_template",
    "plan_scenario",
    "render_plan",
    "render_vocabulary",
    "scenario_specs",
    "steps_table",
    "stream_label",
    "train_models",
    "training_samples",
]
