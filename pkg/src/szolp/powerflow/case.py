"""MATPOWER-style case files: parsing and validation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

SLACK, PV, PQ = 3, 2, 1


class CaseError(ValueError):
    """Malformed or invalid case data."""


class CaseParseError(CaseError):
    pass


class CaseValidationError(CaseError):
    pass


@dataclass
class GridCase:
    """Bus/branch/generator tables; bus indices are 0-based positions.

    Powers are stored in MW/MVAr as in the file; :attr:`base_mva`
    converts to per unit.
    """

    name: str
    base_mva: float
    bus_ids: np.ndarray
    bus_type: np.ndarray
    Pd: np.ndarray
    Qd: np.ndarray
    Gs: np.ndarray
    Bs: np.ndarray
    Vm: np.ndarray
    Vmax: np.ndarray
    Vmin: np.ndarray
    base_kv: np.ndarray
    f_bus: np.ndarray
    t_bus: np.ndarray
    r: np.ndarray
    x: np.ndarray
    b: np.ndarray
    rate_a: np.ndarray
    tap: np.ndarray
    shift_deg: np.ndarray
    gen_bus: np.ndarray
    Pg: np.ndarray
    Qg: np.ndarray
    Qmax: np.ndarray
    Qmin: np.ndarray
    Vg: np.ndarray
    Pmax: np.ndarray
    Pmin: np.ndarray
    cost: np.ndarray  # (n_gen, 3): c2, c1, c0 in $/MW^2h, $/MWh, $/h
    i_min: np.ndarray | None = None

    @property
    def n_bus(self) -> int:
        return self.bus_ids.size

    @property
    def n_branch(self) -> int:
        return self.f_bus.size

    @property
    def n_gen(self) -> int:
        return self.gen_bus.size

    @property
    def slack(self) -> int:
        return int(np.flatnonzero(self.bus_type == SLACK)[0])

    def gen_cost(self, pg_mw: np.ndarray) -> float:
        c = self.cost
        return float(np.sum(c[:, 0] * pg_mw ** 2 + c[:, 1] * pg_mw + c[:, 2]))


_ASSIGN = re.compile(r"mpc\.(\w+)\s*=\s*(.*)")


def _strip_comments(text: str) -> list[tuple[int, str]]:
    out = []
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("%", 1)[0].strip()
        if line:
            out.append((no, line))
    return out


def _parse_matrices(text: str) -> tuple[dict[str, float], dict[str, list[tuple[int, list[float]]]]]:
    scalars: dict[str, float] = {}
    mats: dict[str, list[tuple[int, list[float]]]] = {}
    lines = _strip_comments(text)
    i = 0
    while i < len(lines):
        no, line = lines[i]
        m = _ASSIGN.match(line)
        i += 1
        if not m:
            continue
        key, rhs = m.group(1), m.group(2).strip()
        if not rhs.startswith("["):
            if rhs.startswith(("'", "{")):
                continue
            try:
                scalars[key] = float(rhs.rstrip(";").strip())
            except ValueError:
                raise CaseParseError(f"line {no}: cannot parse scalar mpc.{key} = {rhs!r}") from None
            continue
        body = [(no, rhs[1:])]
        while "]" not in body[-1][1]:
            if i >= len(lines):
                raise CaseParseError(f"line {no}: unterminated matrix mpc.{key}")
            body.append(lines[i])
            i += 1
        body[-1] = (body[-1][0], body[-1][1].split("]", 1)[0])
        rows = []
        for row_no, chunk in body:
            for piece in chunk.split(";"):
                piece = piece.strip()
                if not piece:
                    continue
                try:
                    rows.append((row_no, [float(v) for v in piece.replace(",", " ").split()]))
                except ValueError:
                    raise CaseParseError(f"line {row_no}: malformed row in mpc.{key}: {piece!r}") from None
        mats[key] = rows
    return scalars, mats


def _table(mats, key: str, min_cols: int) -> np.ndarray:
    if key not in mats:
        raise CaseParseError(f"missing matrix mpc.{key}")
    rows = mats[key]
    for no, row in rows:
        if len(row) < min_cols:
            raise CaseParseError(f"line {no}: mpc.{key} row has {len(row)} columns, need {min_cols}")
    width = max(len(r) for _, r in rows) if rows else min_cols
    out = np.zeros((len(rows), width))
    for k, (_, row) in enumerate(rows):
        out[k, :len(row)] = row
    return out


def parse_case(text: str, name: str = "case") -> GridCase:
    """Parse and validate MATPOWER case text.

    Out-of-service branches and generators are dropped. A gencost row must
    be polynomial (model 2) of degree at most 2.
    """
    scalars, mats = _parse_matrices(text)
    if "baseMVA" not in scalars:
        raise CaseParseError("missing mpc.baseMVA")
    base = scalars["baseMVA"]
    bus = _table(mats, "bus", 13)
    gen = _table(mats, "gen", 10)
    br = _table(mats, "branch", 11)
    gc = _table(mats, "gencost", 4) if "gencost" in mats else None

    ids = bus[:, 0].astype(int)
    if len(set(ids.tolist())) != ids.size:
        raise CaseValidationError("duplicate bus numbers")
    pos = {b: k for k, b in enumerate(ids.tolist())}

    def lookup(bus_no: float, what: str, row: int) -> int:
        try:
            return pos[int(bus_no)]
        except KeyError:
            raise CaseValidationError(f"{what} row {row + 1}: unknown bus {int(bus_no)}") from None

    on_br = br[:, 10] > 0
    for k in np.flatnonzero(on_br):
        if br[k, 3] <= 0 and br[k, 8] == 0:
            raise CaseValidationError(
                f"branch row {k + 1} ({int(br[k, 0])}-{int(br[k, 1])}): nonpositive reactance {br[k, 3]}")
    f_bus = np.array([lookup(v, "branch", k) for k, v in enumerate(br[:, 0])], dtype=int)
    t_bus = np.array([lookup(v, "branch", k) for k, v in enumerate(br[:, 1])], dtype=int)
    on_gen = gen[:, 7] > 0
    g_bus = np.array([lookup(v, "gen", k) for k, v in enumerate(gen[:, 0])], dtype=int)

    btype = bus[:, 1].astype(int)
    n_slack = int(np.sum(btype == SLACK))
    if n_slack != 1:
        raise CaseValidationError(f"expected exactly one slack bus, found {n_slack}")

    if gc is None:
        cost = np.zeros((gen.shape[0], 3))
    else:
        if gc.shape[0] < gen.shape[0]:
            raise CaseValidationError("gencost has fewer rows than gen")
        cost = np.zeros((gen.shape[0], 3))
        for k in range(gen.shape[0]):
            model, n = int(gc[k, 0]), int(gc[k, 3])
            if model != 2 or n > 3:
                raise CaseValidationError(f"gencost row {k + 1}: only polynomial cost of degree <= 2")
            coeffs = gc[k, 4:4 + n]
            cost[k, 3 - n:] = coeffs

    n = ids.size
    fb, tb = f_bus[on_br], t_bus[on_br]
    adj = coo_matrix((np.ones(fb.size), (fb, tb)), shape=(n, n))
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise CaseValidationError(f"network is not connected ({n_comp} islands)")

    tap = br[on_br, 8].copy()
    tap[tap == 0] = 1.0
    gsel = np.flatnonzero(on_gen)
    slack = int(np.flatnonzero(btype == SLACK)[0])
    if slack not in g_bus[gsel]:
        raise CaseValidationError("no in-service generator at the slack bus")
    # slack generator first, the rest in file order
    gsel = np.array(sorted(gsel, key=lambda k: (g_bus[k] != slack, k)), dtype=int)
    if len(set(g_bus[gsel].tolist())) != gsel.size:
        raise CaseValidationError("more than one generator per bus is not supported")

    return GridCase(
        name=name, base_mva=base, bus_ids=ids, bus_type=btype,
        Pd=bus[:, 2], Qd=bus[:, 3], Gs=bus[:, 4], Bs=bus[:, 5], Vm=bus[:, 7],
        Vmax=bus[:, 11], Vmin=bus[:, 12], base_kv=bus[:, 9],
        f_bus=fb, t_bus=tb, r=br[on_br, 2], x=br[on_br, 3], b=br[on_br, 4],
        rate_a=br[on_br, 5], tap=tap, shift_deg=br[on_br, 9],
        gen_bus=g_bus[gsel], Pg=gen[gsel, 1], Qg=gen[gsel, 2], Qmax=gen[gsel, 3],
        Qmin=gen[gsel, 4], Vg=gen[gsel, 5], Pmax=gen[gsel, 8], Pmin=gen[gsel, 9],
        cost=cost[gsel],
    )


def load_case(path: str | Path) -> GridCase:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CaseParseError(f"cannot read case file {path}: {exc}") from exc
    return parse_case(text, name=path.stem)


def builtin_case(name: str = "case30") -> GridCase:
    from importlib.resources import files
    return parse_case(files("szolp.powerflow.data").joinpath(f"{name}.m").read_text(), name=name)
