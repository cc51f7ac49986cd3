"""Command-line front end.

Config files are flat ``key = value`` text (``#`` starts a comment line)::

    scenario = second_red_2d
    initial_occupation = 4, 0
    target_eigenvalue = 20
    l = 2
    steps = 50

Usage::

    distill run CONFIG [--output PATH] [--format json|csv] [--seed S] [--trials T] [--quiet]
    distill reproduce [--quiet]
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import json
import math
import operator
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .distillation import (
    ProtocolConfig,
    distillate_projector,
    efficiency_limit,
    run_monte_carlo,
    run_postselected,
)
from .errors import ConfigError, DistillateAbsentError, DistillError
from .fockspace import StateVector, fock_state, superposition
from .scenarios import (
    KINDS,
    CouplingScenario,
    angular_eigenstate_2d,
    cat_target,
    laguerre_f,
    rotated_fock,
)
from .spectral import DEFAULT_RESONANCE_TOL, choose_gamma_tau

MODES = ("postselect", "montecarlo", "efficiency")
REQUIRED = ("scenario", "steps", "gamma_tau | target_eigenvalue + l", "initial_occupation | n_total + theta")

EXIT_OK, EXIT_CONFIG, EXIT_ABSENT = 0, 1, 2

PRESETS = ("cat2d", "cat2d-theta", "w3d", "squares", "qnd")


# --- config parsing -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_NAMES = {"pi": math.pi}
_FUNCS = {"sqrt": math.sqrt}


def _eval_real(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval_real(node.operand)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_real(node.left), _eval_real(node.right))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
            and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval_real(node.args[0]))
    raise ValueError("unsupported expression")


def _real(key: str, text: str) -> float:
    """A float, or an arithmetic expression in ``pi`` and ``sqrt``."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        value = _eval_real(ast.parse(text, mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ConfigError(f"key '{key}': expected a real number, got {text!r}") from None
    return float(value)


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"key '{key}': expected an integer, got {text!r}") from None


def _occupations(key: str, text: str):
    if text.strip().lower() == "all":
        return "all"
    try:
        occs = tuple(tuple(int(n) for n in part.split(",")) for part in text.split(";"))
    except ValueError:
        raise ConfigError(f"key '{key}': expected 'all' or occupations like '4,0' or '0; 1; 4'") from None
    if any(n < 0 for occ in occs for n in occ):
        raise ConfigError(f"key '{key}': occupation numbers must be non-negative")
    return occs


def _choice(options):
    def parse(key: str, text: str) -> str:
        if text not in options:
            raise ConfigError(f"key '{key}': expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _path(key: str, text: str) -> str:
    return text


_PARSERS = {
    "scenario": _choice(KINDS),
    "eta": _real,
    "theta": _real,
    "n_total": _int,
    "initial_occupation": _occupations,
    "gamma_tau": _real,
    "target_eigenvalue": _real,
    "l": _int,
    "steps": _int,
    "truncation": _int,
    "mode": _choice(MODES),
    "trials": _int,
    "seed": _int,
    "tolerance": _real,
    "output": _path,
}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    steps: int
    eta: Optional[float] = None
    theta: Optional[float] = None
    n_total: Optional[int] = None
    initial_occupation: object = None
    gamma_tau: Optional[float] = None
    target_eigenvalue: Optional[float] = None
    l: Optional[int] = None
    truncation: Optional[int] = None
    mode: str = "postselect"
    trials: Optional[int] = None
    seed: Optional[int] = None
    tolerance: float = DEFAULT_RESONANCE_TOL
    output: Optional[str] = None

    @property
    def n_modes(self) -> int:
        return {"qnd": 1, "blue_sideband": 1, "second_red_2d": 2, "second_red_3d": 3}[self.scenario]

    def validate(self) -> RunConfig:
        """Check cross-key constraints and fill in derived defaults."""
        if self.steps < 1:
            raise ConfigError(f"key 'steps': must be >= 1, got {self.steps}")
        if self.tolerance <= 0 or self.tolerance >= 0.1:
            raise ConfigError(f"key 'tolerance': must lie in (0, 0.1), got {self.tolerance}")
        if self.scenario == "qnd":
            if self.eta is None or self.eta <= 0:
                raise ConfigError("key 'eta': the qnd scenario needs a Lamb-Dicke parameter eta > 0")
        elif self.eta is not None:
            raise ConfigError(f"key 'eta': only used by the qnd scenario, not {self.scenario}")

        if self.theta is not None:
            if self.scenario != "second_red_2d":
                raise ConfigError("key 'theta': rotated initial states need scenario = second_red_2d")
            if self.n_total is None:
                raise ConfigError("key 'theta': requires n_total (quanta in the rotated mode)")
            if self.initial_occupation is not None:
                raise ConfigError("key 'theta': cannot be combined with initial_occupation")
        elif self.initial_occupation is None:
            raise ConfigError("key 'initial_occupation': required unless n_total and theta are given")
        if self.initial_occupation not in (None, "all"):
            for occ in self.initial_occupation:
                if len(occ) != self.n_modes:
                    raise ConfigError(
                        f"key 'initial_occupation': {occ} has {len(occ)} modes, "
                        f"scenario {self.scenario} has {self.n_modes}"
                    )

        if self.gamma_tau is not None:
            if self.target_eigenvalue is not None or self.l is not None:
                raise ConfigError("key 'gamma_tau': give either gamma_tau or target_eigenvalue + l, not both")
            if self.gamma_tau <= 0:
                raise ConfigError(f"key 'gamma_tau': must be positive, got {self.gamma_tau}")
        elif self.l is None:
            raise ConfigError("key 'gamma_tau': required (or target_eigenvalue + l)")
        else:
            if self.l < 1:
                raise ConfigError(f"key 'l': must be >= 1, got {self.l}")
            if self.target_eigenvalue is None:
                if not (self.scenario == "qnd" and self.n_total is not None):
                    raise ConfigError("key 'target_eigenvalue': required with l (qnd may infer it from n_total)")
            elif self.target_eigenvalue <= 0:
                raise ConfigError(f"key 'target_eigenvalue': must be positive, got {self.target_eigenvalue}")

        needed = self._initial_excitation()
        truncation = self.truncation
        if truncation is None:
            if needed is None:
                raise ConfigError("key 'truncation': required when initial_occupation = all")
            truncation = needed
        if truncation < 0:
            raise ConfigError(f"key 'truncation': must be >= 0, got {truncation}")
        if needed is not None and needed > truncation:
            raise ConfigError(f"key 'truncation': {truncation} is below the initial state's {needed} quanta")

        trials, seed = self.trials, self.seed
        if self.mode == "montecarlo":
            trials = 10000 if trials is None else trials
            seed = 0 if seed is None else seed
            if trials < 1:
                raise ConfigError(f"key 'trials': must be >= 1, got {trials}")
            if seed < 0:
                raise ConfigError(f"key 'seed': must be a non-negative integer, got {seed}")
        else:
            for key in ("trials", "seed"):
                if getattr(self, key) is not None:
                    raise ConfigError(f"key '{key}': only used with mode = montecarlo")
        return replace(self, truncation=truncation, trials=trials, seed=seed)

    def _initial_excitation(self) -> Optional[int]:
        if self.theta is not None:
            return self.n_total
        if self.initial_occupation == "all":
            return None
        if self.n_modes == 1:
            return max(occ[0] for occ in self.initial_occupation)
        return max(sum(occ) for occ in self.initial_occupation)

    def resolve_gamma_tau(self) -> float:
        if self.gamma_tau is not None:
            return self.gamma_tau
        target = self.target_eigenvalue
        if target is None:
            target = laguerre_f(self.n_total, self.eta) ** 2
        return choose_gamma_tau(target, self.l)

    def build_scenario(self) -> CouplingScenario:
        if self.scenario == "qnd":
            return CouplingScenario.qnd(self.eta, self.truncation)
        return CouplingScenario(self.scenario, self.truncation)

    def initial_state(self, scenario: CouplingScenario) -> StateVector:
        basis = scenario.basis
        if self.theta is not None:
            return rotated_fock(self.n_total, self.theta, basis)
        if self.initial_occupation == "all":
            return superposition(basis, basis.states)
        if len(self.initial_occupation) == 1:
            return fock_state(basis, self.initial_occupation[0])
        return superposition(basis, self.initial_occupation)

    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "initial_occupation":
                text = value if value == "all" else "; ".join(", ".join(str(n) for n in occ) for occ in value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; raises :class:`ConfigError` naming the bad key."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = dict(parser["run"])
    if not raw:
        raise ConfigError("empty config; required keys: " + ", ".join(REQUIRED))
    unknown = sorted(set(raw) - set(_PARSERS))
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'; allowed keys: {', '.join(_PARSERS)}")
    values = {key: _PARSERS[key](key, text.strip()) for key, text in raw.items()}
    for key in ("scenario", "steps"):
        if key not in values:
            raise ConfigError(f"key '{key}': required; required keys: " + ", ".join(REQUIRED))
    return RunConfig(**values).validate()


def load_preset(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return resources.files("distill").joinpath(f"presets/{name}.ini").read_text(encoding="utf-8")


# --- execution ----------------------------------------------------------------


def _target_for(cfg: RunConfig, scenario: CouplingScenario, phi0: StateVector, dist_projector):
    if cfg.theta is not None:
        return cat_target(cfg.n_total, cfg.theta, scenario.basis)
    ideal = dist_projector @ phi0
    return ideal.normalized() if ideal.norm() > 1e-12 else None


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def execute(cfg: RunConfig) -> dict:
    """Run a validated config and return the JSON-shaped results."""
    scenario = cfg.build_scenario()
    gamma_tau = cfg.resolve_gamma_tau()
    phi0 = cfg.initial_state(scenario)
    dist = distillate_projector(scenario, gamma_tau, cfg.tolerance)
    target = _target_for(cfg, scenario, phi0, dist.projector)
    protocol = ProtocolConfig(scenario, gamma_tau, cfg.steps, phi0, target, cfg.tolerance)
    rec = run_postselected(protocol)
    final = rec.final_state
    rs = rec.distillate.resonances
    result = {
        "config": {f.name: _jsonable(getattr(cfg, f.name)) for f in fields(cfg)},
        "scenario": scenario.kind,
        "gamma_tau": gamma_tau,
        "steps": cfg.steps,
        "basis_dimension": scenario.basis.dim,
        "per_step_probs": rec.per_step_probs.tolist(),
        "joint_probs": rec.joint_probs.tolist(),
        "joint_prob": rec.joint_prob,
        "fidelity_trace": None if rec.fidelity_trace is None else rec.fidelity_trace.tolist(),
        "distillate_overlap": rec.distillate_overlap,
        "residual_population": float(1.0 - final.expectation(rec.distillate.projector).real),
        "parity_sign": rec.parity_sign,
        "resonant_set": {
            "tolerance": rs.tolerance,
            "leakage_bound": rs.leakage_bound,
            "leakage_after_steps": rs.leakage_bound ** cfg.steps,
            "members": [{"eigenvalue": m.eigenvalue, "l": m.l, "parity": m.parity} for m in rs.members],
        },
        "final_state": [
            {"label": scenario.basis.label(i), "amplitude": _complex_pair(z)}
            for i, z in enumerate(final.amplitudes)
        ],
    }
    if cfg.mode == "efficiency":
        eff = efficiency_limit(protocol)
        result["efficiency"] = asdict(eff)
    elif cfg.mode == "montecarlo":
        ens = run_monte_carlo(protocol, cfg.trials, cfg.seed)
        result["monte_carlo"] = {
            "trials": ens.trials,
            "seed": ens.seed,
            "successes": ens.successes,
            "success_rate": ens.success_rate,
            "expected_rate": ens.expected_rate,
            "binomial_sigma": ens.binomial_sigma,
            "failure_histogram": ens.failure_histogram[1:].tolist(),
        }
    return result


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def render_json(result: dict) -> str:
    return json.dumps(result, indent=2) + "\n"


def render_csv(result: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step", "probability", "joint_probability", "fidelity"])
    fids = result["fidelity_trace"] or [None] * len(result["per_step_probs"])
    for k, (p, j, f) in enumerate(zip(result["per_step_probs"], result["joint_probs"], fids), start=1):
        writer.writerow([k, repr(p), repr(j), "" if f is None else repr(f)])
    return buf.getvalue()


def run(config_text: str, output: Optional[str] = None, fmt: str = "json", seed: Optional[int] = None,
        trials: Optional[int] = None, gamma: Optional[float] = None, tau: Optional[float] = None,
        quiet: bool = False, stdout=None, stderr=None) -> int:
    """Parse, run and write results.  Returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = parse_config(config_text)
        overrides = {}
        if seed is not None:
            overrides["seed"] = seed
        if trials is not None:
            overrides["trials"] = trials
        if (gamma is None) != (tau is None):
            raise ConfigError("--gamma and --tau must be given together")
        if gamma is not None:
            overrides.update(gamma_tau=gamma * tau, target_eigenvalue=None, l=None)
        if overrides:
            cfg = replace(cfg, **overrides).validate()
        result = execute(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    except DistillateAbsentError as exc:
        print(f"distillate absent: {exc}", file=stderr)
        return EXIT_ABSENT
    except DistillError as exc:
        print(f"configuration error: {exc}", file=stderr)
        return EXIT_CONFIG

    text = render_csv(result) if fmt == "csv" else render_json(result)
    path = output or cfg.output
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    if not quiet:
        fid = result["fidelity_trace"]
        print(
            f"{result['scenario']}: gamma_tau={result['gamma_tau']:.12g} steps={cfg.steps} "
            f"joint_prob={result['joint_prob']:.6g} "
            + (f"final_fidelity={fid[-1]:.6g}" if fid else ""),
            file=stderr,
        )
    return EXIT_OK


# --- reproduction suite ----------------------------------------------------------


@dataclass
class Check:
    preset: str
    claim: str
    value: float
    criterion: str
    passed: bool
    seconds: float = 0.0


def _fid(rec, k):
    return float(rec.fidelity_trace[k - 1])


def _preset_protocol(name: str, perturb: float, steps: Optional[int] = None, target=None):
    cfg = parse_config(load_preset(name))
    if steps is not None:
        cfg = replace(cfg, steps=steps)
    scenario = cfg.build_scenario()
    gamma_tau = cfg.resolve_gamma_tau() + perturb
    phi0 = cfg.initial_state(scenario)
    if target is None:
        target = _target_for(cfg, scenario, phi0, distillate_projector(scenario, gamma_tau, cfg.tolerance).projector)
    return cfg, scenario, ProtocolConfig(scenario, gamma_tau, cfg.steps, phi0, target, cfg.tolerance)


def _checks_cat2d(perturb):
    cfg, sc, proto = _preset_protocol("cat2d", perturb)
    basis = sc.basis
    rec = run_postselected(proto)
    members = sorted(round(m.eigenvalue, 9) for m in rec.distillate.resonances.members)
    ov = [abs(angular_eigenstate_2d(4, m, basis).inner(proto.initial_state)) for m in (4, -4)]
    return [
        ("resonant eigenvalues are {20, 20}", float(len(members)), "members == [20, 20]", members == [20.0, 20.0]),
        ("|<4,+4|4,0>| = 1/4", ov[0], "|x - 0.25| <= 1e-10", abs(ov[0] - 0.25) <= 1e-10),
        ("|<4,-4|4,0>| = 1/4", ov[1], "|x - 0.25| <= 1e-10", abs(ov[1] - 0.25) <= 1e-10),
        ("efficiency 1/8 at N=50", rec.joint_prob, "|x - 0.125| <= 1e-3", abs(rec.joint_prob - 0.125) <= 1e-3),
        ("cat fidelity at N=5", _fid(rec, 5), "x >= 0.95", _fid(rec, 5) >= 0.95),
    ]


def _checks_cat2d_theta(perturb):
    cfg, sc, proto = _preset_protocol("cat2d-theta", perturb)
    rec = run_postselected(proto)
    psi = rec.conditional_states[4]
    up = angular_eigenstate_2d(cfg.n_total, cfg.n_total, sc.basis).inner(psi)
    down = angular_eigenstate_2d(cfg.n_total, -cfg.n_total, sc.basis).inner(psi)
    phase = float(np.angle(down / up)) % (2 * np.pi)
    expected = (2 * cfg.n_total * cfg.theta) % (2 * np.pi)
    err = abs(math.remainder(phase - expected, 2 * np.pi))
    return [
        ("relative phase = 2 n_T theta (mod 2 pi)", err, "x <= 1e-8", err <= 1e-8),
        ("efficiency 1/8 at N=50", rec.joint_prob, "|x - 0.125| <= 1e-3", abs(rec.joint_prob - 0.125) <= 1e-3),
        ("cat fidelity at N=5", _fid(rec, 5), "x >= 0.95", _fid(rec, 5) >= 0.95),
    ]


def _checks_w3d(perturb):
    sc = parse_config(load_preset("w3d")).build_scenario()
    w_state = superposition(sc.basis, [(2, 0, 0), (0, 2, 0), (0, 0, 2)])
    _, _, proto = _preset_protocol("w3d", perturb, target=w_state)
    rec = run_postselected(proto)
    return [
        ("efficiency 1/3 at N=50", rec.joint_prob, "|x - 1/3| <= 1e-3", abs(rec.joint_prob - 1 / 3) <= 1e-3),
        ("W-state fidelity at N=5", _fid(rec, 5), "x >= 0.96", _fid(rec, 5) >= 0.96),
    ]


def _checks_squares(perturb):
    _, _, proto = _preset_protocol("squares", perturb)
    rec = run_postselected(proto)
    final = rec.final_state
    squares = [n * n for n in range(5) if n * n <= proto.scenario.n_use]
    tail = float(sum(abs(final.amplitude((n,))) ** 2 for n in range(proto.scenario.n_use + 1) if n not in squares))
    return [("non-square population at N=40", tail, "x < 1e-6", tail < 1e-6)]


def _checks_qnd(perturb):
    _, _, proto = _preset_protocol("qnd", perturb)
    rec = run_postselected(proto)
    deficit = 1.0 - abs(rec.final_state.amplitude((2,))) ** 2
    return [("1 - population(n=2) at N=60", deficit, "x <= 1e-4", deficit <= 1e-4)]


_SUITE = {
    "cat2d": _checks_cat2d,
    "cat2d-theta": _checks_cat2d_theta,
    "w3d": _checks_w3d,
    "squares": _checks_squares,
    "qnd": _checks_qnd,
}


def reproduce_all(gamma_tau_perturbation: float = 0.0) -> list[Check]:
    """Run every preset and evaluate its reproduction checks.

    ``gamma_tau_perturbation`` is added to each preset's coupling time; it
    exists to confirm that the checks are sensitive to a mis-set ``gamma_tau``.
    """
    checks = []
    for name, fn in _SUITE.items():
        start = time.perf_counter()
        try:
            rows = fn(gamma_tau_perturbation)
        except DistillError as exc:
            rows = [(f"run failed: {exc}", float("nan"), "runs", False)]
        elapsed = time.perf_counter() - start
        checks.extend(Check(name, claim, float(value), crit, bool(ok), elapsed) for claim, value, crit, ok in rows)
    return checks


def format_report(checks: list[Check]) -> str:
    lines = [f"{'preset':<12} {'check':<42} {'value':>22}  {'criterion':<22} {'result':<6} {'time[s]':>8}"]
    for c in checks:
        lines.append(
            f"{c.preset:<12} {c.claim:<42} {c.value:>22.15g}  {c.criterion:<22} "
            f"{'PASS' if c.passed else 'FAIL':<6} {c.seconds:>8.3f}"
        )
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="distill", description="Repeated-measurement distillation of trapped-ion motional states.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one configuration file (or preset name)")
    p_run.add_argument("config", help="path to a config file, or one of: " + ", ".join(PRESETS))
    p_run.add_argument("--output", help="results file (default: config 'output' key, else stdout)")
    p_run.add_argument("--format", choices=("json", "csv"), default="json")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--trials", type=int)
    p_run.add_argument("--gamma", type=float, help="coupling constant; multiplied with --tau")
    p_run.add_argument("--tau", type=float, help="interaction time; multiplied with --gamma")
    p_run.add_argument("--quiet", action="store_true")
    p_rep = sub.add_parser("reproduce", help="run all presets and check every reproduced claim")
    p_rep.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    if args.command == "run":
        path = Path(args.config)
        if path.exists():
            text = path.read_text(encoding="utf-8")
        elif args.config in PRESETS:
            text = load_preset(args.config)
        else:
            print(f"configuration error: no such file or preset: {args.config}", file=sys.stderr)
            return EXIT_CONFIG
        return run(text, args.output, args.format, args.seed, args.trials, args.gamma, args.tau, args.quiet)

    checks = reproduce_all()
    if not args.quiet:
        sys.stdout.write(format_report(checks))
    return 0 if all(c.passed for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
