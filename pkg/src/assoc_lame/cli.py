"""Command-line interface: ``assoc-lame {edges,solve,partner,verify}``.

Parameter values are resolved in the order: command-line flag, environment
variable ``LAME_<NAME>``, ``key = value`` config file, built-in default.
Data goes to ``--output`` (written atomically) or to stdout; the human
summary goes to stderr.
"""
import argparse
from dataclasses import dataclass, field
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__, susy, verify
from .bloch import BlochPair, fd_second_derivative, potential, scan_band_edges
from .elliptic import lattice_from_modulus
from .errors import ConsistencyError, DegenerateEnergyError, DomainError, LameError, SpecError, VerificationError
from .frobenius import ModelParams

ENV_PREFIX = "LAME_"

# name -> (converter, default); None defaults mean "required by some command"
PARAMS = {
    "m": (int, 3),
    "ell": (int, 1),
    "k2": (float, 0.95),
    "energy": (float, None),
    "epsilon1": (float, None),
    "epsilon2": (float, None),
    "lambda1": (float, 0.0),
    "lambda2": (float, 0.0),
    "sign": (str, "+"),
    "xmin": (float, None),
    "xmax": (float, None),
    "samples": (int, 2001),
    "format": (str, "csv"),
    "output": (str, None),
    "plot": (str, None),
    "suite": (str, "all"),
}


# -------------------------------------------------------------- config


def read_config_file(path):
    """Plain ``key = value`` lines; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_").lower()
            if key not in PARAMS:
                raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = val
    return out


def resolve(args, environ=None):
    """Merge flags, environment, config file and defaults into a dict."""
    environ = os.environ if environ is None else environ
    cfg_path = args.config or environ.get(ENV_PREFIX + "CONFIG")
    filecfg = read_config_file(cfg_path) if cfg_path else {}
    values = {}
    for name, (conv, default) in PARAMS.items():
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
            continue
        raw = environ.get(ENV_PREFIX + name.upper(), filecfg.get(name))
        if raw is None:
            values[name] = default
            continue
        try:
            values[name] = conv(raw)
        except ValueError:
            raise DomainError(f"cannot read {name} = {raw!r}") from None
    return values


@dataclass
class RunConfig:
    params: ModelParams
    lat: object
    xmin: float
    xmax: float
    samples: int
    values: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, values):
        p = ModelParams(values["m"], values["ell"], values["k2"])
        lat = lattice_from_modulus(p.k2)
        xmin = values["xmin"] if values["xmin"] is not None else -4.0 * lat.K
        xmax = values["xmax"] if values["xmax"] is not None else 4.0 * lat.K
        samples = values["samples"]
        if samples < 2:
            raise DomainError(f"samples must be at least 2, got {samples}")
        if not xmin < xmax:
            raise DomainError(f"need xmin < xmax, got [{xmin}, {xmax}]")
        if values["format"] not in ("csv", "json"):
            raise DomainError(f"format must be csv or json, got {values['format']!r}")
        return cls(p, lat, float(xmin), float(xmax), int(samples), values)

    @property
    def xs(self):
        return np.linspace(self.xmin, self.xmax, self.samples)


# -------------------------------------------------------------- output


def fmt(v):
    """17 significant digits, '.' decimal point, no locale dependence."""
    return "%.17g" % v


@dataclass
class GridSeries:
    xs: np.ndarray
    columns: dict
    meta: dict

    def __post_init__(self):
        n = len(self.xs)
        for name, col in self.columns.items():
            if len(col) != n:
                raise ConsistencyError(f"column {name} has {len(col)} rows, expected {n}")
        if n > 1:
            dx = np.diff(self.xs)
            if np.any(dx <= 0) or np.max(np.abs(dx - dx[0])) > 1e-12 * max(1.0, abs(dx[0])):
                raise ConsistencyError("grid must be strictly increasing and uniform")

    def to_csv(self):
        names = list(self.columns)
        lines = [",".join(["x"] + names)]
        cols = [self.columns[k] for k in names]
        for i, x in enumerate(self.xs):
            lines.append(",".join([fmt(x)] + [fmt(c[i]) for c in cols]))
        return "\n".join(lines) + "\n"

    def to_json(self):
        doc = {"meta": self.meta,
               "columns": {"x": [float(v) for v in self.xs],
                           **{k: [float(v) for v in c] for k, c in self.columns.items()}}}
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"

    def render(self, kind):
        return self.to_csv() if kind == "csv" else self.to_json()


def atomic_write(path, text):
    """Write to a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def svg_plot(xs, columns, width=640, height=400, pad=40):
    """Polylines plus a bounding box and a zero axis; nothing else."""
    ys = np.concatenate([np.asarray(c, dtype=float) for c in columns.values()])
    ylo, yhi = float(np.min(ys)), float(np.max(ys))
    if yhi == ylo:
        yhi = ylo + 1.0
    xlo, xhi = float(xs[0]), float(xs[-1])
    sx = lambda x: pad + (x - xlo) / (xhi - xlo) * (width - 2 * pad)
    sy = lambda y: height - pad - (y - ylo) / (yhi - ylo) * (height - 2 * pad)
    colours = ["#000000", "#888888", "#1f77b4", "#d62728", "#2ca02c"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#444444"/>']
    if ylo < 0 < yhi:
        parts.append(f'<line x1="{pad}" y1="{sy(0):.2f}" x2="{width - pad}" y2="{sy(0):.2f}" '
                     'stroke="#bbbbbb"/>')
    for i, (name, col) in enumerate(columns.items()):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, col))
        parts.append(f'<polyline fill="none" stroke="{colours[i % len(colours)]}" '
                     f'points="{pts}"><title>{name}</title></polyline>')
    parts.append(f'<text x="{pad}" y="{pad - 8}" font-size="12">y in [{ylo:.4g}, {yhi:.4g}], '
                 f'x in [{xlo:.4g}, {xhi:.4g}]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit(text, values):
    if values["output"]:
        atomic_write(values["output"], text)
    else:
        sys.stdout.write(text)


def say(msg):
    print(msg, file=sys.stderr)


def base_meta(cfg):
    p = cfg.params
    return {"m": p.m, "ell": p.ell, "k2": p.k2, "K": cfg.lat.K, "Kprime": cfg.lat.Kprime,
            "version": __version__}


# -------------------------------------------------------------- commands


def band_edges(p, lat):
    """(edges, gaps, method, scanned range)."""
    if (p.m, p.ell) == (3, 1):
        be = susy.band_edges_31(p.k2)
        return list(be.edges), list(be.gaps), "closed form", None, list(be.labels)
    edges, scanned = susy.default_scan(p, lat)
    gaps = [(edges[i], edges[i + 1]) for i in range(1, len(edges) - 1, 2)]
    return edges, gaps, "discriminant scan", scanned, [f"E{i}" for i in range(len(edges))]


def cmd_edges(cfg):
    p, lat = cfg.params, cfg.lat
    edges, gaps, method, scanned, labels = band_edges(p, lat)
    if scanned is not None:
        say(f"scanned energies [{scanned[0]:.6g}, {scanned[1]:.6g}]; edges above the range "
            "are not reported")
        if len(edges) % 2 == 0:
            say("warning: even number of edges found; a gap may straddle the scan limit")
    say(f"band edges ({method}): " + ", ".join(f"{e:.8g}" for e in edges))
    for i, (a, b) in enumerate(gaps, 1):
        say(f"gap {i}: ({a:.8g}, {b:.8g})")
    if cfg.values["format"] == "csv":
        lines = ["kind,label,lower,upper"]
        lines += [f"edge,{lab},{fmt(e)},{fmt(e)}" for lab, e in zip(labels, edges)]
        lines += [f"gap,G{i},{fmt(a)},{fmt(b)}" for i, (a, b) in enumerate(gaps, 1)]
        text = "\n".join(lines) + "\n"
    else:
        meta = base_meta(cfg)
        meta.update(method=method, scanned_range=scanned)
        text = json.dumps({"meta": meta, "edges": dict(zip(labels, edges)),
                           "gaps": [list(g) for g in gaps]}, indent=1) + "\n"
    emit(text, cfg.values)
    return 0


def nearest_edge_message(p, lat, E):
    edges = band_edges(p, lat)[0]
    near = min(edges, key=lambda e: abs(e - E))
    return f"nearest band edge is {near:.12g} (distance {abs(near - E):.3g})"


def cmd_solve(cfg):
    p, lat = cfg.params, cfg.lat
    E = cfg.values["energy"]
    if E is None:
        raise DomainError("solve needs --energy")
    try:
        pair = BlochPair(p, E, lat)
    except DegenerateEnergyError as exc:
        raise DegenerateEnergyError(f"{exc}; {nearest_edge_message(p, lat, E)}") from None
    except ConsistencyError as exc:
        raise ConsistencyError(f"{exc}; {nearest_edge_message(p, lat, E)}") from None
    x = cfg.xs
    V = potential(x, p)
    columns = {"V": V}
    report = {}
    for sign, tag in ((+1, "plus"), (-1, "minus")):
        f = lambda t, s=sign: pair.psi(t, s)
        psi = f(x)
        res = np.abs(-fd_second_derivative(f, x) + (V - E) * psi) / np.max(np.abs(psi))
        columns[f"psi_{tag}_re"] = psi.real
        columns[f"psi_{tag}_im"] = psi.imag
        columns[f"residual_{tag}"] = res
        report[f"max_residual_{tag}"] = float(np.max(res))
    W = pair.wronskian(x)
    report["wronskian"] = [W[0].real, W[0].imag]
    report["wronskian_variation"] = float(np.max(np.abs(W - W[0])) / abs(W[0]))
    mu = pair.multiplier
    report["floquet_multiplier"] = [mu.real, mu.imag]
    report["period"] = p.period_factor * lat.K
    meta = base_meta(cfg)
    meta.update(energy=E, b=[[complex(b).real, complex(b).imag] for b in pair.sol.b],
                verification=report)
    series = GridSeries(x, columns, meta)
    say(f"E = {E}: max residual {max(report['max_residual_plus'], report['max_residual_minus']):.3e}, "
        f"Wronskian variation {report['wronskian_variation']:.3e}, multiplier {mu:.10g}")
    write_series(series, cfg, plot_cols=("V", "psi_plus_re", "psi_minus_re"))
    return 0


def write_series(series, cfg, plot_cols):
    text = series.render(cfg.values["format"])
    svg = None
    if cfg.values["plot"]:
        svg = svg_plot(series.xs, {k: series.columns[k] for k in plot_cols})
    emit(text, cfg.values)
    if svg is not None:
        atomic_write(cfg.values["plot"], svg)


def partner_spec(values):
    e1 = values["epsilon1"] if values["epsilon1"] is not None else values["energy"]
    if e1 is None:
        raise SpecError("partner needs --epsilon1 (or --energy)")
    sign = {"+": 1, "plus": 1, "+1": 1, "-": -1, "minus": -1, "-1": -1}.get(str(values["sign"]))
    if sign is None:
        raise SpecError(f"sign must be + or -, got {values['sign']!r}")
    if values["epsilon2"] is None:
        if values["lambda2"]:
            raise SpecError("--lambda2 needs --epsilon2")
        return susy.SusySpec(1, (e1,), signs=(sign,), weights=(values["lambda1"],))
    return susy.SusySpec(2, (e1, values["epsilon2"]), signs=(sign, sign),
                         weights=(values["lambda1"], values["lambda2"]))


def cmd_partner(cfg):
    p, lat = cfg.params, cfg.lat
    spec = partner_spec(cfg.values)
    partner = susy.build_partner(p, spec, lat)
    x = cfg.xs
    columns = {"V": potential(x, p), "V_partner": partner.evaluate(x)}
    if not partner.periodic:
        columns["V_partner_periodic"] = partner.periodic_reference(x)
    meta = base_meta(cfg)
    meta.update(order=spec.order, energies=list(spec.energies), seed_kinds=list(spec.seed_kinds),
                signs=list(spec.signs), weights=list(spec.weights), periodic=partner.periodic,
                defect_window=list(partner.defect_window) if partner.defect_window else None,
                bound_state_energies=partner.bound_state_energies)
    series = GridSeries(x, columns, meta)
    kind = "periodic" if partner.periodic else "defect"
    say(f"order-{spec.order} {kind} partner at energies {list(spec.energies)}"
        + (f", defect window {partner.defect_window}" if partner.defect_window else ""))
    write_series(series, cfg, plot_cols=tuple(c for c in ("V", "V_partner") if c in columns))
    return 0


def cmd_verify(cfg):
    suite = cfg.values["suite"]
    if suite not in verify.SUITES + ("all",):
        raise DomainError(f"unknown suite {suite!r}; choose from {', '.join(verify.SUITES)}, all")
    checks, timings = verify.run(suite)
    failed = [c for c in checks if not c.passed]
    report = {"suite": suite, "passed": not failed, "timings": timings,
              "checks": [c.as_dict() for c in checks],
              "failed": [c.name for c in failed]}
    for c in checks:
        say(f"{'PASS' if c.passed else 'FAIL'}  [{c.suite}] {c.name}: worst {c.worst:.3e} (tol {c.tol:g})")
    emit(json.dumps(report, indent=1) + "\n", cfg.values)
    if failed:
        raise VerificationError(f"{len(failed)} check(s) failed: " + "; ".join(report["failed"]))
    return 0


COMMANDS = {"edges": cmd_edges, "solve": cmd_solve, "partner": cmd_partner, "verify": cmd_verify}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--m", type=int)
    common.add_argument("--ell", type=int)
    common.add_argument("--k2", type=float, help="elliptic modulus squared, in (0, 1)")
    common.add_argument("--energy", type=float)
    common.add_argument("--epsilon1", type=float, help="first factorisation energy")
    common.add_argument("--epsilon2", type=float, help="second factorisation energy (order 2)")
    common.add_argument("--lambda1", type=float, help="weight of psi- in the first seed")
    common.add_argument("--lambda2", type=float, help="weight of psi- in the second seed")
    common.add_argument("--sign", choices=["+", "-"], help="which Bloch solution seeds a partner")
    common.add_argument("--xmin", type=float)
    common.add_argument("--xmax", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--plot", help="also write an SVG line plot to this file")
    parser = argparse.ArgumentParser(prog="assoc-lame", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("edges", parents=[common], help="band edges and gaps")
    sub.add_parser("solve", parents=[common], help="Bloch solutions at one energy")
    sub.add_parser("partner", parents=[common], help="SUSY partner potential")
    pv = sub.add_parser("verify", parents=[common], help="run the self-check suites")
    pv.add_argument("--suite", choices=list(verify.SUITES) + ["all"])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        values = resolve(args)
        cfg = RunConfig.from_values(values)
        return COMMANDS[args.command](cfg)
    except LameError as exc:
        say(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        say(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
