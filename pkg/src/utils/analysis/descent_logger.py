from dataclasses import dataclass
from time import perf_counter


@dataclass(frozen=True)
class DescentState:
    """Logged descent state at one iteration"""
    iteration: int
    value: float
    grad_norm: float
    step_norm: float
    halvings: int


class DescentLogger:
    """
    Captures descent states every ``log_interval`` iterations.
    An interval of 0 disables capturing; ``verbose`` additionally prints each captured state.
    """

    def __init__(self, log_interval: int = 0, verbose: bool = False):
        self.log_interval: int = log_interval
        self.verbose: bool = verbose
        self.log_states: list[DescentState] = []
        self.next_log: int = 0
        self.real_time_start: float = 0

    def log(self, iteration: int, value: float, grad_norm: float,
            step_norm: float = 0.0, halvings: int = 0):
        """Capture the current descent state"""
        if self.log_interval <= 0:
            return
        if self.real_time_start == 0:
            self.real_time_start = perf_counter()
        if self.should_log(iteration):
            self.increment_log_timing()
            state = DescentState(iteration, float(value), float(grad_norm), float(step_norm), halvings)
            self.log_states.append(state)
            if self.verbose:
                passed_time = perf_counter() - self.real_time_start
                print(f"it: {iteration: <8}F: {value: <24.16g}|G|: {grad_norm: <12.3e}rT: {passed_time:.3f}")

    def should_log(self, iteration: int) -> bool:
        return iteration >= self.next_log

    def increment_log_timing(self):
        """Increase the next logged iteration"""
        self.next_log += self.log_interval

    def reset(self):
        self.log_states = []
        self.next_log = 0
        self.real_time_start = 0

    def as_rows(self) -> list[dict]:
        return [state.__dict__.copy() for state in self.log_states]
