"""TOML scenario files <-> :class:`~smrac.engine.SimulationConfig`.

Layout (all sections except ``[reference_model]``, ``[[subsystems]]`` and
``[schedule]`` are optional)::

    [reference_model]   A, B
    [[subsystems]]      A, B           (one table per subsystem)
    [schedule]          t0, sequence, and either interval (cyclic) or instants
    [gains]             k_f, k_s, k_l, k_ll, k_sw, Gamma, eta, Q_m, adaptation_sign
    [initial_conditions] x0, xm0, phi_hat0
    [signal]            rbar, delta_amplitude, delta_decay, delta_frequencies
    [simulation]        h, t_end, epsilon_iie, mode, inactive_target
"""

import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import ReferenceSignal, SimulationConfig
from .exceptions import ConfigError, ScenarioError
from .system_model import ReferenceModel, Subsystem, SwitchSchedule

DEFAULT_NAME = "default"


def default_scenario_path():
    return resources.files("smrac") / "data" / "default.toml"


def default_scenario_text():
    return default_scenario_path().read_text()


def _locate(text, section, key=None, index=0):
    """1-based line of ``key`` inside ``[section]`` (``index``-th array table)."""
    if text is None:
        return None
    current, count, header_line = None, -1, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[\[\s*([\w.]+)\s*\]\]|\[\s*([\w.]+)\s*\]", line)
        if m:
            current = m.group(1) or m.group(2)
            if current == section:
                count += 1
                if count == index:
                    header_line = lineno
            continue
        if current == section and count == index and key is not None:
            if re.match(rf"{re.escape(key)}\s*=", line):
                return lineno
    return header_line


class _Reader:
    def __init__(self, text, source):
        self.text = text
        self.source = source

    def fail(self, message, section, key=None, index=0):
        raise ScenarioError(message, self.source, _locate(self.text, section, key, index))

    def matrix(self, value, section, key, index=0, column_ok=False):
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(f"{key} must be a rectangular array of numbers", section, key, index)
        if arr.ndim == 1 and column_ok:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.size == 0:
            self.fail(f"{key} must be a non-empty 2-D array", section, key, index)
        if not np.all(np.isfinite(arr)):
            self.fail(f"{key} has non-finite entries", section, key, index)
        return arr

    def vector(self, value, section, key, index=0):
        try:
            arr = np.atleast_1d(np.asarray(value, dtype=float))
        except (TypeError, ValueError):
            self.fail(f"{key} must be a number or an array of numbers", section, key, index)
        if not np.all(np.isfinite(arr)):
            self.fail(f"{key} has non-finite entries", section, key, index)
        return arr

    def number(self, table, section, key, default):
        value = table.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{key} must be a number", section, key)
        return float(value)


def parse_scenario(text, source="<scenario>", validate=True):
    """Parse scenario text into a :class:`SimulationConfig`.

    With ``validate`` the assumptions (full-rank inputs, Hurwitz reference,
    exact matching, grid alignment) are enforced as well.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else max(1, len(text.splitlines()))
        raise ScenarioError(f"invalid TOML: {exc}", source, line) from None
    cfg = config_from_dict(doc, text=text, source=source)
    if validate:
        cfg.validate()
    return cfg


def config_from_dict(doc, text=None, source="<scenario>"):
    rd = _Reader(text, source)
    for name in ("reference_model", "subsystems", "schedule"):
        if name not in doc:
            raise ScenarioError(f"missing [{name}] section", source)

    refd = doc["reference_model"]
    reference = ReferenceModel(
        rd.matrix(refd.get("A"), "reference_model", "A"),
        rd.matrix(refd.get("B"), "reference_model", "B", column_ok=True),
    )
    subs = []
    if not isinstance(doc["subsystems"], list) or not doc["subsystems"]:
        rd.fail("[[subsystems]] must list at least one subsystem", "subsystems")
    for k, sd in enumerate(doc["subsystems"]):
        A = rd.matrix(sd.get("A"), "subsystems", "A", k)
        B = rd.matrix(sd.get("B"), "subsystems", "B", k, column_ok=True)
        try:
            subs.append(Subsystem(A, B))
        except ConfigError as exc:
            rd.fail(f"subsystem {k + 1}: {exc}", "subsystems", "A", k)

    sim = doc.get("simulation", {})
    h = rd.number(sim, "simulation", "h", 1e-3)
    t_end = rd.number(sim, "simulation", "t_end", 240.0)

    sched = doc["schedule"]
    t0 = rd.number(sched, "schedule", "t0", 0.0)
    seq = sched.get("sequence")
    if not isinstance(seq, list) or not seq or not all(isinstance(s, int) and not isinstance(s, bool) for s in seq):
        rd.fail("sequence must be a non-empty list of subsystem ids", "schedule", "sequence")
    try:
        if "instants" in sched:
            instants = rd.vector(sched["instants"], "schedule", "instants") if sched["instants"] else ()
            schedule = SwitchSchedule(t0, tuple(instants), tuple(seq))
        elif "interval" in sched:
            schedule = SwitchSchedule.periodic(t0, rd.number(sched, "schedule", "interval", None), seq, t_end)
        else:
            schedule = SwitchSchedule(t0, (), tuple(seq[:1]))
    except ConfigError as exc:
        rd.fail(str(exc), "schedule", "sequence")

    gains = doc.get("gains", {})
    eta = gains.get("eta", "auto")
    if eta == "auto":
        eta = None
    ic = doc.get("initial_conditions", {})
    sig = doc.get("signal", {})
    signal = ReferenceSignal(
        rd.vector(sig.get("rbar", 0.0), "signal", "rbar"),
        amplitude=rd.number(sig, "signal", "delta_amplitude", 10.0),
        decay=rd.number(sig, "signal", "delta_decay", 0.1),
        frequencies=tuple(rd.vector(sig.get("delta_frequencies", [2, 3, 4, 5, 6]), "signal", "delta_frequencies")),
    )
    kwargs = dict(
        subsystems=subs,
        reference=reference,
        schedule=schedule,
        signal=signal,
        h=h,
        t_end=t_end,
        k_f=rd.number(gains, "gains", "k_f", 1.0),
        k_s=rd.number(gains, "gains", "k_s", 1.0),
        k_l=gains.get("k_l", 1.0),
        k_ll=gains.get("k_ll", 1.0),
        k_sw=gains.get("k_sw", 1.0),
        Gamma=gains.get("Gamma", 1.0),
        eta=eta,
        Q_m=gains.get("Q_m"),
        adaptation_sign=rd.number(gains, "gains", "adaptation_sign", 1.0),
        x0=ic.get("x0"),
        xm0=ic.get("xm0"),
        phi_hat0=ic.get("phi_hat0"),
        epsilon_iie=rd.number(sim, "simulation", "epsilon_iie", 1e-6),
        mode=sim.get("mode", "memory"),
        inactive_target=sim.get("inactive_target", "u_ei"),
    )
    try:
        return SimulationConfig(**kwargs)
    except (ConfigError, ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), source) from None


def load_scenario(path, validate=True):
    """Read a scenario file; the name ``default`` selects the bundled scenario."""
    if str(path) == DEFAULT_NAME:
        return parse_scenario(default_scenario_text(), "default.toml", validate)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", str(path)) from None
    return parse_scenario(text, str(path), validate)


def default_config(**changes):
    cfg = load_scenario(DEFAULT_NAME)
    return cfg.replace(**changes) if changes else cfg


def dump_scenario(config):
    """Scenario text with every field explicit (switching instants expanded)."""
    return tomli_w.dumps(config.to_dict())


def save_scenario(config, path):
    Path(path).write_text(dump_scenario(config))
