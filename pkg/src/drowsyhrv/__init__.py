"""HRV-based driver drowsiness detection with Shapley feature ranking and
constrained adversarial robustness evaluation."""

__version__ = "0.1.0"
