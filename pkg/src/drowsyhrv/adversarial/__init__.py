"""Class-pattern constrained perturbations, adversarial training and the evasion attack."""
from .attack import (
    DEFAULT_MAGNITUDE,
    MAX_ITERATIONS,
    AttackReport,
    augment_training_set,
    is_valid,
    load_attack_report,
    perturb_sample,
    row_rng,
    run_attack,
    save_adversarial_set,
    save_attack_report,
    save_trajectory_csv,
)
from .constraints import HRV_RULES, ConstraintSet, Rule
from .patterns import HRV_GROUPS, INTEGER_FEATURES, ClassPattern, fit_class_patterns, resolve_groups

__all__ = [
    "AttackReport", "ClassPattern", "ConstraintSet", "DEFAULT_MAGNITUDE", "HRV_GROUPS", "HRV_RULES",
    "INTEGER_FEATURES", "MAX_ITERATIONS", "Rule", "augment_training_set", "fit_class_patterns",
    "is_valid", "load_attack_report", "perturb_sample", "resolve_groups", "row_rng", "run_attack",
    "save_adversarial_set", "save_attack_report", "save_trajectory_csv",
]
