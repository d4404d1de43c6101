"""Running formulas through a SAT solver and turning models into networks."""

from __future__ import annotations

import hashlib
import logging
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cdcl
from .cnf import SAT, UNKNOWN, UNSAT, CnfFormula, SolverVerdict, parse_solver_output, write_dimacs
from .encodings import ProblemSpec, build
from .network import CertificationRecord, LayeredNetwork, certify

log = logging.getLogger(__name__)

SOLVER_ENV = "SORTNET_SOLVER"
KNOWN_SOLVERS = ("kissat", "cadical")
EMBEDDED_CLAUSE_CAP = 50_000


class SolverError(RuntimeError):
    pass


class IntegrityError(RuntimeError):
    """A decoded witness contradicts the encoding (an encoder bug, not user error)."""


def _bundled_kissat() -> str | None:
    # the passagemath-kissat wheel ships a standalone binary
    try:
        import sage_wheels
    except ImportError:
        return None
    for root in getattr(sage_wheels, "__path__", []):
        exe = Path(root) / "bin" / "kissat"
        if exe.is_file() and os.access(exe, os.X_OK):
            return str(exe)
    return None


def find_solver() -> list[str] | None:
    """Default external command: ``$SORTNET_SOLVER``, then known solvers on PATH."""
    env = os.environ.get(SOLVER_ENV)
    if env:
        return shlex.split(env)
    for name in KNOWN_SOLVERS:
        exe = shutil.which(name)
        if exe:
            return [exe]
    exe = _bundled_kissat()
    return [exe] if exe else None


@dataclass
class SolverConfig:
    mode: str = "external"  # or "embedded"
    command: list[str] | None = None
    time_limit: float | None = None
    tmpdir: str | None = None
    keep_files: bool = False
    max_clauses: int = EMBEDDED_CLAUSE_CAP

    def resolved_command(self) -> list[str]:
        cmd = self.command or find_solver()
        if not cmd:
            raise SolverError(f"no SAT solver found; set {SOLVER_ENV} or install kissat/cadical")
        if shutil.which(cmd[0]) is None and not os.access(cmd[0], os.X_OK):
            raise SolverError(f"solver executable {cmd[0]!r} not found")
        return list(cmd)

    @classmethod
    def auto(cls, time_limit: float | None = None) -> "SolverConfig":
        """External solver when one is available, embedded otherwise."""
        if find_solver():
            return cls("external", time_limit=time_limit)
        return cls("embedded", time_limit=time_limit)


def _solve_external(f: CnfFormula, cfg: SolverConfig) -> SolverVerdict:
    cmd = cfg.resolved_command()
    text = write_dimacs(f)
    digest = hashlib.sha256(text.encode()).hexdigest()[:24]
    tmp = Path(cfg.tmpdir or tempfile.gettempdir()) / "sortnet"
    tmp.mkdir(parents=True, exist_ok=True)
    path = tmp / f"{digest}.cnf"
    if not path.exists():
        part = path.with_suffix(f".{os.getpid()}.part")
        part.write_text(text)
        os.replace(part, path)
    try:
        proc = subprocess.run(cmd + [str(path)], capture_output=True, text=True, timeout=cfg.time_limit)
    except subprocess.TimeoutExpired:
        return SolverVerdict(UNKNOWN, diagnostics=f"timeout after {cfg.time_limit}s")
    except OSError as exc:
        raise SolverError(f"cannot run {cmd[0]}: {exc}") from exc
    finally:
        if not cfg.keep_files:
            path.unlink(missing_ok=True)
    verdict = parse_solver_output(proc.stdout, f.num_vars)
    if verdict.status == UNKNOWN and proc.returncode not in (0, 10, 20):
        verdict.diagnostics = f"exit {proc.returncode}: {proc.stderr[-2000:]}"
    return verdict


def _solve_embedded(f: CnfFormula, cfg: SolverConfig) -> SolverVerdict:
    if f.num_clauses > cfg.max_clauses:
        raise SolverError(
            f"formula has {f.num_clauses} clauses; the embedded solver is capped at {cfg.max_clauses}"
        )
    flat, lens = f.csr()
    status, model = cdcl.solve_csr(f.num_vars, flat, lens, time_limit=cfg.time_limit)
    if status == SAT:
        return SolverVerdict(SAT, model)
    if status == UNSAT:
        return SolverVerdict(UNSAT)
    return SolverVerdict(UNKNOWN, diagnostics=f"budget exhausted after {cfg.time_limit}s")


def solve(f: CnfFormula, cfg: SolverConfig | None = None) -> SolverVerdict:
    cfg = cfg or SolverConfig()
    if cfg.mode == "external":
        return _solve_external(f, cfg)
    if cfg.mode == "embedded":
        return _solve_embedded(f, cfg)
    raise SolverError(f"unknown solver mode {cfg.mode!r}")


def decode_network(verdict: SolverVerdict, f: CnfFormula) -> LayeredNetwork:
    """Read the comparator variables of a model back into a network."""
    spec: ProblemSpec = f.meta["spec"]
    g = f.meta["g"]
    pairs = f.meta["pairs"]
    on = verdict.model[g] if g.size else np.zeros(g.shape, dtype=bool)
    layers = []
    for k in range(g.shape[0]):
        chosen = [pairs[p] for p in np.flatnonzero(on[k])]
        if spec.shape == "size" and len(chosen) != 1:
            raise IntegrityError(f"position {k + 1} selects {len(chosen)} comparators")
        layers.append(tuple(chosen))
    try:
        return LayeredNetwork(spec.n, tuple(layers))
    except ValueError as exc:
        raise IntegrityError(f"decoded network is malformed: {exc}") from exc


@dataclass
class SolveOutcome:
    spec: ProblemSpec
    status: str
    network: LayeredNetwork | None = None
    certification: CertificationRecord | None = None
    seconds: float = 0.0
    num_vars: int = 0
    num_clauses: int = 0
    diagnostics: str = ""
    meta: dict = field(default_factory=dict)


def solve_spec(spec: ProblemSpec, cfg: SolverConfig | None = None) -> SolveOutcome:
    """Build, solve, decode and certify one instance.

    A SAT answer whose witness fails the brute-force check raises
    :class:`IntegrityError`; it is never reported as a result.
    """
    t0 = time.perf_counter()
    f = build(spec)
    verdict = solve(f, cfg)
    out = SolveOutcome(spec, verdict.status, num_vars=f.num_vars, num_clauses=f.num_clauses,
                       diagnostics=verdict.diagnostics)
    if verdict.status == SAT:
        net = decode_network(verdict, f)
        rec = certify(net, spec.cls, spec.eps)
        if not rec.verdict:
            raise IntegrityError(f"witness for {spec} fails certification: {rec}")
        if spec.size_cap is not None and net.size > spec.size_cap:
            raise IntegrityError(f"witness has {net.size} comparators, cap is {spec.size_cap}")
        out.network, out.certification = net, rec
    out.seconds = time.perf_counter() - t0
    log.info("%s n=%d %s=%d cap=%s -> %s (%.2fs, %d vars, %d clauses)", spec.encoding, spec.n, spec.shape,
             spec.bound, spec.size_cap, out.status, out.seconds, out.num_vars, out.num_clauses)
    return out
