from .base import ExperimentResult, write_result
from .exp1 import Exp1Config, run_exp1
from .exp2 import Exp2Config, run_exp2
from .exp3 import Exp3Config, run_exp3
from .exp4 import Exp4Config, run_exp4, ca_step, initial_blob

__all__ = [
    "ExperimentResult", "write_result",
    "Exp1Config", "run_exp1",
    "Exp2Config", "run_exp2",
    "Exp3Config", "run_exp3",
    "Exp4Config", "run_exp4", "ca_step", "initial_blob",
]
