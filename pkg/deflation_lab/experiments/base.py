import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

from tqdm import tqdm

from deflation_lab import config
from deflation_lab.utils import spawn_rngs
from deflation_lab.xlog import RunLog

logger = logging.getLogger(__name__)


@dataclass
class ExperimentSummary:
    """What the CLI needs after a run: the table to echo, the files written
    and the exit status."""

    experiment: str
    rows: list
    files: list = field(default_factory=list)
    exit_code: int = 0


class Experiment:
    """Base class of the experiment drivers.

    A driver turns its config into independent cells (``build_cells``), the
    cells run in a thread pool capped by ``DEFLATION_LAB_THREADS``, and
    ``finalize`` writes the tables from ``self.results`` in cell order, so the
    files do not depend on completion order.
    """

    name = None

    def __init__(self, cfg, out=None, max_workers=None, progress=True, debug=False):
        self.cfg = dict(cfg)
        self.seed = int(cfg["seed"])
        self.max_workers = max_workers or config.THREADS
        self.progress = progress
        self.debug = debug
        self.set_label(out or cfg.get("out") or os.path.join("results", self.name))
        self.cells = {}
        self.results = {}
        self.files = []
        self.log = RunLog(os.path.join(self.directory, "%s.log" % self.name))
        self.log("-" * 60)
        self.log("Experiment: %s" % self.name)
        self.log("directory: %s" % self.directory)
        self.log("Config:")
        self.log.print_dict(self.cfg)
        self.log("-" * 60)

    def set_label(self, directory):
        self.directory = directory
        if not os.path.exists(directory):
            os.makedirs(directory)

    def path(self, *parts):
        return os.path.join(self.directory, *parts)

    def rngs(self, count):
        """One independent generator per item, derived from the seed."""
        return spawn_rngs(self.seed, count)

    def add_cell(self, label, func, *args):
        if label in self.cells:
            raise ValueError("duplicate experiment cell %r" % (label,))
        self.cells[label] = (func, args)

    def build_cells(self):
        pass

    def run_cells(self):
        """Run every cell; serially in debug mode, else in a thread pool."""
        if not self.cells:
            return
        bar = tqdm(total=len(self.cells), desc=self.name, disable=not self.progress, leave=False)
        if self.debug or self.max_workers == 1:
            for label, (func, args) in self.cells.items():
                self._store(label, func(*args))
                bar.update()
        else:
            workers = max(1, min(self.max_workers, len(self.cells)))
            with ThreadPoolExecutor(max_workers=workers) as executor:
                futures = {
                    executor.submit(func, *args): label
                    for label, (func, args) in self.cells.items()
                }
                for future in as_completed(futures):
                    self._store(futures[future], future.result())
                    bar.update()
        bar.close()

    def _store(self, label, result):
        self.results[label] = result
        logger.info("%s: finished %s", self.name, label)

    def finalize(self):
        """Write the outputs and return the summary rows."""
        return ExperimentSummary(self.name, [], self.files)

    def run(self):
        self.build_cells()
        self.run_cells()
        summary = self.finalize()
        for row in summary.rows:
            self.log(row)
        self.log("exit code: %d" % summary.exit_code)
        self.log.close()
        return summary

    def written(self, path):
        self.files.append(path)
        return path
