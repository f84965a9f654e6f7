"""Operation accounting and the two-input NAND gate cost model.

An 18-bit real addition costs 125 gates and a real multiplication 2200.
Comparisons are charged as additions. Two views are kept:

* calibrated: the published per-stage counts for 64 antennas and 8 users,
  including the printed logic-operation value of every row;
* measured: counts of the operations this implementation executes.
"""
from dataclasses import dataclass

import numpy as np

ADD_GATES = 125
MULT_GATES = 2200
SYMBOLS_PER_SLOT = 14

# histogram binning: 30 bins of width 2000/30 from 1040 to 3040
HIST_EDGES = 1040.0 + np.arange(31) * (2000.0 / 30.0)

STAGES = ("gram", "matched_filter", "diag_add", "inverse", "matvec", "dcd")
STAGE_LABELS = {
    "gram": "H^H H",
    "matched_filter": "h^H y",
    "diag_add": "H^H H + I",
    "inverse": "(H^H H + I)^-1",
    "matvec": "(H^H H + I)^-1 h^H y",
    "dcd": "Sequential DCD with bound",
}
DETECTOR_STAGES = {
    "mmse": ("gram", "matched_filter", "diag_add", "inverse", "matvec"),
    "dcd": ("gram", "matched_filter", "dcd"),
}
# computed once per subcarrier in scenario 2, the rest once per OFDM symbol
ONCE_PER_SLOT = frozenset({"gram", "diag_add", "inverse"})


def gate_cost(adds, mults):
    """Logic operations for a number of real additions and multiplications."""
    if adds < 0 or mults < 0:
        raise ValueError("operation counts must be nonnegative")
    return ADD_GATES * int(adds) + MULT_GATES * int(mults)


@dataclass(frozen=True)
class OpCountLedger:
    stage: str
    adds: int = 0
    mults: int = 0

    @property
    def logic_ops(self):
        return gate_cost(self.adds, self.mults)

    def __add__(self, other):
        if not isinstance(other, OpCountLedger):
            return NotImplemented
        stage = self.stage if self.stage == other.stage else f"{self.stage}+{other.stage}"
        return OpCountLedger(stage, self.adds + other.adds, self.mults + other.mults)

    def scaled(self, factor):
        return OpCountLedger(self.stage, self.adds * factor, self.mults * factor)


@dataclass(frozen=True)
class PublishedRow:
    """A per-operation row as printed, which may disagree with the gate model."""
    stage: str
    adds: int
    mults: int
    printed_logic_ops: int

    @property
    def logic_ops(self):
        return self.printed_logic_ops

    @property
    def model_logic_ops(self):
        return gate_cost(self.adds, self.mults)

    @property
    def consistent(self):
        return self.model_logic_ops == self.printed_logic_ops


CALIBRATED_ROWS = {
    "gram": PublishedRow("gram", 8128, 8192, 19038400),
    "matched_filter": PublishedRow("matched_filter", 2032, 2048, 5521600),
    "diag_add": PublishedRow("diag_add", 16, 0, 2000),
    "inverse": PublishedRow("inverse", 1700, 1900, 4392500),
    "matvec": PublishedRow("matvec", 240, 256, 593200),
    # mean DCD cost rounded from 1972 real additions
    "dcd": PublishedRow("dcd", 2000, 0, 250000),
}

PUBLISHED_TOTALS = {
    ("mmse", 1): 29547700,
    ("mmse", 2): 109040100,
    ("dcd", 1): 24810000,
    ("dcd", 2): 99840800,
}


@dataclass(frozen=True)
class ScenarioModel:
    """Scenario 1 recomputes everything per subcarrier and symbol; scenario 2
    reuses Gram-dependent results over ``reuse_factor`` OFDM symbols."""
    scenario: int
    reuse_factor: int = 1

    def __post_init__(self):
        if (self.scenario, self.reuse_factor) not in ((1, 1), (2, SYMBOLS_PER_SLOT)):
            raise ValueError("scenario 1 uses reuse 1 and scenario 2 uses reuse 14")

    @classmethod
    def of(cls, scenario):
        return cls(scenario, 1 if scenario == 1 else SYMBOLS_PER_SLOT)


def scenario_total(stages, model, detector):
    """Total logic operations of a detector under a reuse scenario.

    ``stages`` is an iterable of per-stage ledgers (``OpCountLedger`` or
    ``PublishedRow``); exactly the detector's stages must be present.
    """
    if detector not in DETECTOR_STAGES:
        raise ValueError(f"unknown detector {detector!r}")
    by_stage = {}
    for s in stages:
        if s.stage not in STAGES:
            raise ValueError(f"unknown stage {s.stage!r}")
        by_stage[s.stage] = s
    if set(by_stage) != set(DETECTOR_STAGES[detector]):
        raise ValueError(f"{detector} needs stages {DETECTOR_STAGES[detector]}, got {sorted(by_stage)}")
    total = 0
    for name, s in by_stage.items():
        times = 1 if name in ONCE_PER_SLOT else model.reuse_factor
        total += times * s.logic_ops
    return total


def calibrated_stages(detector):
    return [CALIBRATED_ROWS[s] for s in DETECTOR_STAGES[detector]]


def calibrated_totals():
    return {(det, sc): scenario_total(calibrated_stages(det), ScenarioModel.of(sc), det)
            for det in ("mmse", "dcd") for sc in (1, 2)}


# -- measured-mode counts for the algorithms implemented here ---------------

def gram_counts(n_rx, n_users):
    """Lower triangle plus real diagonal of ``H^H H``."""
    pairs = n_users * (n_users - 1) // 2
    adds = pairs * (4 * n_rx - 2) + n_users * (2 * n_rx - 1)
    mults = pairs * 4 * n_rx + n_users * 2 * n_rx
    return OpCountLedger("gram", adds, mults)


def matched_filter_counts(n_rx, n_users):
    return OpCountLedger("matched_filter", n_users * (4 * n_rx - 2), 4 * n_rx * n_users)


def diag_add_counts(n):
    return OpCountLedger("diag_add", 2 * n, 0)


def cholesky_counts(n):
    """Complex Cholesky; square roots and reciprocals are charged as multiplications."""
    adds = mults = 0
    for j in range(n):
        adds += 2 * j
        mults += 2 * j + 2
        below = n - 1 - j
        adds += below * 4 * j
        mults += below * (4 * j + 2)
    return OpCountLedger("inverse", adds, mults)


def triangular_solve_counts(n):
    """Forward plus backward substitution for one right-hand side."""
    adds = mults = 0
    for i in range(n):
        adds += 2 * 4 * i
        mults += 2 * (4 * i + 2)
    return OpCountLedger("matvec", adds, mults)


def dcd_counts(mean_real_additions):
    return OpCountLedger("dcd", int(round(mean_real_additions)), 0)


def measured_stages(detector, n_rx, n_users, dcd_mean_adds=None):
    stages = [gram_counts(n_rx, n_users), matched_filter_counts(n_rx, n_users)]
    if detector == "mmse":
        stages += [diag_add_counts(n_users), cholesky_counts(n_users),
                   triangular_solve_counts(n_users)]
    elif detector == "dcd":
        if dcd_mean_adds is None:
            raise ValueError("measured DCD stage needs the mean addition count")
        stages.append(dcd_counts(dcd_mean_adds))
    else:
        raise ValueError(f"unknown detector {detector!r}")
    return stages


# -- additions histogram ----------------------------------------------------

@dataclass(frozen=True)
class AdditionHistogram:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    below: int
    above: int
    n: int
    minimum: int
    maximum: int


def dcd_addition_histogram(ledgers, edges=HIST_EDGES):
    """Histogram of real additions (comparisons included) per DCD detection.

    ``ledgers`` may be DCD ledgers (with a ``real_additions`` attribute) or
    plain integer counts. Values outside the bin range are tallied in
    ``below``/``above`` rather than dropped.
    """
    values = np.array([getattr(l, "real_additions", l) for l in ledgers], dtype=np.int64)
    if values.size == 0:
        raise ValueError("histogram needs at least one ledger")
    counts, _ = np.histogram(values, bins=edges)
    return AdditionHistogram(
        edges=np.asarray(edges), counts=counts, mean=float(values.mean()),
        below=int(np.sum(values < edges[0])), above=int(np.sum(values > edges[-1])),
        n=int(values.size), minimum=int(values.min()), maximum=int(values.max()))


# -- reports -----------------------------------------------------------------

def table3_rows(measured=None):
    """Rows of the per-operation table: (label, adds, mults, printed, model, note)."""
    rows = []
    for name in STAGES:
        row = CALIBRATED_ROWS[name]
        note = "" if row.consistent else (
            f"printed value disagrees with {ADD_GATES}*adds + {MULT_GATES}*mults = {row.model_logic_ops}")
        rows.append((STAGE_LABELS[name], row.adds, row.mults, row.printed_logic_ops,
                     row.model_logic_ops, note))
    return rows


def report_tsv(measured=None):
    """Complexity report as TSV text mirroring the two published tables.

    ``measured`` optionally maps detector -> list of measured stage ledgers.
    """
    lines = ["# per-operation complexity (calibrated, 64 antennas x 8 users)",
             "operation\treal_additions\treal_multiplications\tlogic_operations\tmodel_logic_operations\tnote"]
    for label, a, m, printed, model, note in table3_rows():
        lines.append(f"{label}\t{a}\t{m}\t{printed}\t{model}\t{note}")
    lines.append("")
    lines.append("# complexity results (calibrated)")
    lines.append("detection_algorithm\tscenario_1\tscenario_2")
    totals = calibrated_totals()
    for det, label in (("mmse", "MMSE"), ("dcd", STAGE_LABELS["dcd"])):
        lines.append(f"{label}\t{totals[(det, 1)]}\t{totals[(det, 2)]}")
    if measured:
        lines.append("")
        lines.append("# measured operation counts (this implementation)")
        lines.append("detector\tstage\treal_additions\treal_multiplications\tlogic_operations")
        for det, stages in measured.items():
            for s in stages:
                lines.append(f"{det}\t{s.stage}\t{s.adds}\t{s.mults}\t{s.logic_ops}")
        lines.append("")
        lines.append("# measured complexity results")
        lines.append("detector\tscenario_1\tscenario_2")
        for det, stages in measured.items():
            t1 = scenario_total(stages, ScenarioModel.of(1), det)
            t2 = scenario_total(stages, ScenarioModel.of(2), det)
            lines.append(f"{det}\t{t1}\t{t2}")
    return "\n".join(lines) + "\n"


def report_text(measured=None):
    out = ["Complexity per operation (calibrated, 64 x 8)", ""]
    out.append(f"{'operation':<28}{'adds':>8}{'mults':>8}{'logic ops':>12}")
    flagged = []
    for label, a, m, printed, model, note in table3_rows():
        mark = " *" if note else ""
        out.append(f"{label:<28}{a:>8}{m:>8}{printed:>12}{mark}")
        if note:
            flagged.append(f"* {label}: {note}")
    out += [""] + flagged + ["", "Complexity results (logic operations)", ""]
    totals = calibrated_totals()
    out.append(f"{'detector':<28}{'scenario 1':>12}{'scenario 2':>12}")
    for det, label in (("mmse", "MMSE"), ("dcd", STAGE_LABELS["dcd"])):
        out.append(f"{label:<28}{totals[(det, 1)]:>12}{totals[(det, 2)]:>12}")
    if measured:
        out += ["", "Measured (this implementation)", ""]
        for det, stages in measured.items():
            t1 = scenario_total(stages, ScenarioModel.of(1), det)
            t2 = scenario_total(stages, ScenarioModel.of(2), det)
            out.append(f"{det:<28}{t1:>12}{t2:>12}")
    return "\n".join(out) + "\n"
