from .optimize import BisectionResult, bisect_sign_change, golden_section_max
from .seeding import derive_seeds, trial_generators

__all__ = [
    "BisectionResult",
    "bisect_sign_change",
    "golden_section_max",
    "derive_seeds",
    "trial_generators",
]
