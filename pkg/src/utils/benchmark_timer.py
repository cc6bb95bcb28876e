from collections import defaultdict
from contextlib import contextmanager
from time import perf_counter


class Timer:
    """
    Accumulates wall time per label. Labels opened inside another measured block are nested stages:
    they are reported but left out of the total, and re-entering an active label is not counted twice.
    """

    def __init__(self):
        self.line_times: dict[str, float] = defaultdict(float)
        self.line_counts: dict[str, int] = defaultdict(int)
        self.top_level: set[str] = set()
        self._active: list[str] = []

    @property
    def total_time(self):
        return sum(time for label, time in self.line_times.items() if label in self.top_level)

    def print_times(self):
        if not self.line_times:
            return
        indent_size = max(map(len, self.line_times.keys())) + 3
        print(f"total time {self.total_time:>20.6f}")
        for label, time in self.line_times.items():
            name = label if label in self.top_level else f"- {label}"
            print(f"{name:>{indent_size}} took in total {time:<12.6f} over {self.line_counts[label]} calls, "
                  f"perc. {time / max(self.total_time, 1e-300):.3f}")

    def as_dict(self) -> dict[str, float]:
        return dict(self.line_times)

    def reset(self):
        self.line_times.clear()
        self.line_counts.clear()
        self.top_level.clear()
        self._active.clear()

    @contextmanager
    def measure(self, label: str):
        """
        Measures how much a set of code takes in given context window.

        Use case:
        with timer_obj.measure(label):
            benchmark code
        """
        if label in self._active:
            yield
            return
        if not self._active:
            self.top_level.add(label)
        self._active.append(label)
        start = perf_counter()
        try:
            yield
        finally:
            self._active.pop()
            self.line_times[label] += perf_counter() - start
            self.line_counts[label] += 1
