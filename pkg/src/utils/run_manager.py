import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from src import __version__
from src.utils.load_config import Config
from src.utils.serialization import json_serializer

REQUIREMENTS: tuple[str, ...] = ("numpy", "scipy", "PyYAML", "numba")


@dataclass(eq=False)
class Curve:
    """Tabular side output written as CSV, e.g. (epsilon, mass) or (C, best_r)."""
    name: str
    header: tuple[str, ...]
    rows: list[tuple[float, ...]]

    def to_dict(self) -> dict:
        return {"name": self.name, "header": list(self.header), "rows": [list(row) for row in self.rows]}


@dataclass(eq=False)
class RunRecord:
    """
    Result of one scenario run. ``payload`` and ``checks`` are deterministic for a fixed config;
    ``wall_time`` and the per-stage ``timings`` are kept out of the payload.
    """
    scenario: str
    config_hash: str
    payload: dict
    checks: list = field(default_factory=list)
    curves: list[Curve] = field(default_factory=list)
    wall_time: float = 0.0
    timings: dict[str, float] = field(default_factory=dict)
    library_version: str = __version__

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.checks if row.asserted)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "library_version": self.library_version,
            "wall_time": self.wall_time,
            "timings": self.timings,
            "passed": self.passed,
            "checks": [row.to_dict() for row in self.checks],
            "payload": self.payload,
            "curves": [curve.to_dict() for curve in self.curves],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=json_serializer)


def get_class_vars(config_class) -> dict:
    """
    Automatically format all set parameters and values in a configs class.
    Filters all non-parameter related class variables returned from vars().

    :param config_class: Config class with parameters and values
    :return: Dict of parameter of a configs class
    """
    return {name: value
            for name, value in vars(config_class).items()
            if not name.startswith("__")
            and not callable(value)
            and not isinstance(value, (classmethod, staticmethod, property))
            }


def config_snapshot(config: Config) -> dict:
    return {section.__class__.__name__: get_class_vars(section) for section in config.sections}


def config_hash(config: Config) -> str:
    """sha256 of the canonical JSON form of every config section."""
    canonical = json.dumps(config_snapshot(config), sort_keys=True, default=json_serializer)
    return hashlib.sha256(canonical.encode()).hexdigest()


def package_version(name: str) -> str:
    try:
        return version(name)
    except PackageNotFoundError:
        return "not installed"


class RunManager:
    """
    Stores scenario results in a run directory:
    - ``run_record.jsonl`` with one JSON line per scenario run
    - one CSV file per curve
    - ``configs`` (readable) and ``configs.json`` with the used parameters and package versions
    """

    def __init__(self, config: Config, project_root: Path, run_dir: Path | None = None, force: bool = False):
        self.config: Config = config
        self.name: str = config.run.RUN_NAME
        self.project_root: Path = Path(project_root)
        self.force: bool = force
        if run_dir is not None:
            self.current_run_dir: Path | None = Path(run_dir)
            self.name = self.name or self.current_run_dir.name
        elif self.name != "":
            self.current_run_dir = self.project_root / config.run.OUTPUT_DIR / self.name
        else:
            self.current_run_dir = None

    @property
    def active(self) -> bool:
        return self.current_run_dir is not None

    def make_run_directory(self):
        """
        Create a new directory for data storage of the current run.
        An existing directory is only reused with ``force``.
        """
        if not self.active:
            # Skip when no run name
            return

        os.makedirs(self.current_run_dir.parent, exist_ok=True)
        try:
            os.makedirs(self.current_run_dir, exist_ok=self.force)
        except FileExistsError as error:
            raise FileExistsError(
                f"{error}\n"
                f"Error: Run directory '{self.current_run_dir}' already exists.\n\n"
                f"[Tip] Make sure that the run name is unique, delete the existing folder or pass --force.\n"
                f"Look in '{os.path.abspath(self.current_run_dir.parent)}' for existing run names.\n"
            )

    def save(self, record: RunRecord):
        if not self.active:
            return
        self.write_record(record)
        for curve in record.curves:
            self.write_curve(curve)
        self.save_config(record)
        self.save_config_json(record)

    def write_record(self, record: RunRecord):
        """Append the record as one JSON line."""
        with open(self.current_run_dir / "run_record.jsonl", "a") as jfile:
            json.dump(record.to_dict(), jfile, default=json_serializer)
            jfile.write("\n")

    def write_curve(self, curve: Curve):
        data = np.asarray(curve.rows, dtype=np.float64).reshape(-1, len(curve.header))
        np.savetxt(self.current_run_dir / f"{curve.name}.csv", data, delimiter=",",
                   header=",".join(curve.header), comments="", fmt="%.17g")

    def save_config(self, record: RunRecord):
        """
        Save the used configs parameters and values used in the current run.
        The file is written in a more simple readable format.
        Also stores meta-data of the versions of the requirements.
        """
        config_file: Path = self.current_run_dir / "configs"
        with open(config_file, 'w') as file:
            file.write(f"[{self.name}]\n")
            time_stamp: str = datetime.now().strftime("%d/%m/%Y, %H:%M:%S")
            file.write(f"Run start date and time: {time_stamp}\n")
            file.write(f"Total run time: {timedelta(seconds=record.wall_time)}\n")
            file.write(f"Config hash: {record.config_hash}\n")

            for section in self.config.sections:
                file.write(f"\n")
                file.write(f"{section.__class__.__name__}:\n")
                for name, value in get_class_vars(section).items():
                    file.write(f"\t{name}: {value}\n")

            file.write("\nVersions\n")
            file.write(f"\tPython: {sys.version.split()[0]}\n")
            file.write(f"\tfrechet-lab: {__version__}\n")
            for requirement in REQUIREMENTS:
                file.write(f"\t{requirement}: {package_version(requirement)}\n")

    def save_config_json(self, record: RunRecord):
        """
        Save the used configs parameters and values used in the current run in json format.
        Functions the same as the default save_config()
        """
        config_data: dict = {
            "meta_data": {
                "Run_name": self.name,
                "Run_start": datetime.now().strftime("%d/%m/%Y %H:%M:%S"),
                "Total_run_time": record.wall_time,
                "Config_hash": record.config_hash,
                "Versions": {"frechet-lab": __version__,
                             **{requirement: package_version(requirement) for requirement in REQUIREMENTS}},
            },
            "configs": config_snapshot(self.config),
        }
        with open(self.current_run_dir / "configs.json", 'w') as jfile:
            json.dump(config_data, jfile, default=json_serializer)
