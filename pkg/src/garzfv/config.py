"""Flat INI run configurations.

Sections: [model], [grid], [initial], [slab], [output], [checks].  All
physical quantities are decimal numbers.  Piecewise data use the syntax

    pieces = x_left x_right value ; x_left x_right value_left value_right

with one piece per semicolon-separated group (three numbers: constant
piece; four: linear ramp).  parse -> dump -> parse is the identity on the
normalized form.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields, replace

from .core import Grid, InitialData, Piece
from .errors import ConfigError
from .iteration import SlabConfig
from .model import VelocityModel, make_model


def format_number(x: float) -> str:
    return f"{float(x):.17g}"


def parse_pieces(text: str):
    """Parse the semicolon-separated piece list; blank text means none."""
    pieces = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) not in (3, 4):
            raise ConfigError(
                f"piece {chunk!r} must have 3 numbers (constant) or 4 "
                "(linear ramp)")
        try:
            nums = [float(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"piece {chunk!r}: {exc}") from exc
        if len(nums) == 3:
            pieces.append(Piece.const(*nums))
        else:
            pieces.append(Piece(*nums))
    return tuple(pieces)


def dump_pieces(pieces) -> str:
    out = []
    for p in pieces:
        nums = [p.x_left, p.x_right, p.v_left]
        if p.v_right != p.v_left:
            nums.append(p.v_right)
        out.append(" ".join(format_number(n) for n in nums))
    return " ; ".join(out)


@dataclass
class RunConfig:
    """Everything one solve needs, mirroring the INI sections."""

    model_name: str = "greenshields"
    gamma: float = 1.0
    x_min: float = -4.0
    x_max: float = 4.0
    n_cells: int = 256
    rho_pieces: tuple = ()
    psi_pieces: tuple = ()
    z_inf: float = 0.0
    u_inf: float = 1.0
    t_final: float = 1.0
    tau0: float | None = None
    m0: float | None = None
    tol_phi: float | None = None
    max_picard_iters: int = 25
    cfl: float = 0.5
    snapshots_per_slab: int = 32
    entropy_levels: int = 11
    n_output: int = 32
    out_dir: str = ""
    write_snapshots: bool = True
    write_plot: bool = True
    audit: bool = True

    def grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_cells)

    def data(self) -> InitialData:
        return InitialData(rho_pieces=self.rho_pieces,
                           psi_pieces=self.psi_pieces,
                           z_inf=self.z_inf, u_inf=self.u_inf)

    def model(self) -> VelocityModel:
        params = {"gamma": self.gamma} if self.model_name == "power" else {}
        return make_model(self.model_name, params)

    def slab(self) -> SlabConfig:
        return SlabConfig(tau0=self.tau0, m0=self.m0, tol_phi=self.tol_phi,
                          max_picard_iters=self.max_picard_iters,
                          cfl=self.cfl,
                          snapshots_per_slab=self.snapshots_per_slab,
                          entropy_levels=self.entropy_levels)


_OPTIONAL_FLOATS = ("tau0", "m0", "tol_phi")

_SECTION_KEYS = {
    "model": {"name", "gamma"},
    "grid": {"x_min", "x_max", "n_cells"},
    "initial": {"rho_pieces", "psi_pieces", "z_inf", "u_inf"},
    "slab": {"t_final", "tau0", "m0", "tol_phi", "max_picard_iters", "cfl",
             "snapshots_per_slab", "entropy_levels"},
    "output": {"n_output", "dir", "write_snapshots", "write_plot"},
    "checks": {"audit"},
}


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc
    for sec_name in parser.sections():
        if sec_name not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{sec_name}]")
        extra = sorted(set(parser[sec_name]) - _SECTION_KEYS[sec_name])
        if extra:
            raise ConfigError(
                f"unknown key(s) in [{sec_name}]: {', '.join(extra)}")
    cfg = RunConfig()

    def section(name):
        return parser[name] if parser.has_section(name) else {}

    def field(sec_name, sec, key, default, conv):
        raw = sec.get(key, None)
        if raw is None or (isinstance(raw, str) and not raw.strip()):
            return default
        try:
            return conv(raw)
        except (ConfigError, TypeError, ValueError) as exc:
            raise ConfigError(
                f"[{sec_name}] {key} = {raw!r}: {exc}") from exc

    sec = section("model")
    cfg.model_name = sec.get("name", cfg.model_name).strip()
    cfg.gamma = field("model", sec, "gamma", cfg.gamma, float)

    sec = section("grid")
    cfg.x_min = field("grid", sec, "x_min", cfg.x_min, float)
    cfg.x_max = field("grid", sec, "x_max", cfg.x_max, float)
    cfg.n_cells = field("grid", sec, "n_cells", cfg.n_cells, int)

    sec = section("initial")
    cfg.rho_pieces = field("initial", sec, "rho_pieces", (), parse_pieces)
    cfg.psi_pieces = field("initial", sec, "psi_pieces", (), parse_pieces)
    cfg.z_inf = field("initial", sec, "z_inf", cfg.z_inf, float)
    cfg.u_inf = field("initial", sec, "u_inf", cfg.u_inf, float)

    sec = section("slab")
    cfg.t_final = field("slab", sec, "t_final", cfg.t_final, float)
    for name in _OPTIONAL_FLOATS:
        setattr(cfg, name, field("slab", sec, name, None, float))
    cfg.max_picard_iters = field("slab", sec, "max_picard_iters",
                                 cfg.max_picard_iters, int)
    cfg.cfl = field("slab", sec, "cfl", cfg.cfl, float)
    cfg.snapshots_per_slab = field("slab", sec, "snapshots_per_slab",
                                   cfg.snapshots_per_slab, int)
    cfg.entropy_levels = field("slab", sec, "entropy_levels",
                               cfg.entropy_levels, int)

    sec = section("output")
    cfg.n_output = field("output", sec, "n_output", cfg.n_output, int)
    cfg.out_dir = sec.get("dir", cfg.out_dir).strip()
    cfg.write_snapshots = field("output", sec, "write_snapshots", True,
                                _parse_bool)
    cfg.write_plot = field("output", sec, "write_plot", True, _parse_bool)

    sec = section("checks")
    cfg.audit = field("checks", sec, "audit", True, _parse_bool)
    return cfg


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    val = str(raw).strip().lower()
    if val in ("1", "on", "true", "yes"):
        return True
    if val in ("0", "off", "false", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def dump_config_text(cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write("[model]\n")
    buf.write(f"name = {cfg.model_name}\n")
    buf.write(f"gamma = {format_number(cfg.gamma)}\n")
    buf.write("\n[grid]\n")
    buf.write(f"x_min = {format_number(cfg.x_min)}\n")
    buf.write(f"x_max = {format_number(cfg.x_max)}\n")
    buf.write(f"n_cells = {cfg.n_cells}\n")
    buf.write("\n[initial]\n")
    buf.write(f"rho_pieces = {dump_pieces(cfg.rho_pieces)}\n")
    buf.write(f"psi_pieces = {dump_pieces(cfg.psi_pieces)}\n")
    buf.write(f"z_inf = {format_number(cfg.z_inf)}\n")
    buf.write(f"u_inf = {format_number(cfg.u_inf)}\n")
    buf.write("\n[slab]\n")
    buf.write(f"t_final = {format_number(cfg.t_final)}\n")
    for name in _OPTIONAL_FLOATS:
        val = getattr(cfg, name)
        if val is not None:
            buf.write(f"{name} = {format_number(val)}\n")
    buf.write(f"max_picard_iters = {cfg.max_picard_iters}\n")
    buf.write(f"cfl = {format_number(cfg.cfl)}\n")
    buf.write(f"snapshots_per_slab = {cfg.snapshots_per_slab}\n")
    buf.write(f"entropy_levels = {cfg.entropy_levels}\n")
    buf.write("\n[output]\n")
    buf.write(f"n_output = {cfg.n_output}\n")
    if cfg.out_dir:
        buf.write(f"dir = {cfg.out_dir}\n")
    buf.write(f"write_snapshots = {'on' if cfg.write_snapshots else 'off'}\n")
    buf.write(f"write_plot = {'on' if cfg.write_plot else 'off'}\n")
    buf.write("\n[checks]\n")
    buf.write(f"audit = {'on' if cfg.audit else 'off'}\n")
    return buf.getvalue()


def dump_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config_text(cfg))


def config_from_scenario(scn) -> RunConfig:
    """RunConfig equivalent of a shipped scenario."""
    return RunConfig(
        model_name="greenshields", gamma=1.0,
        x_min=scn.grid.x_min, x_max=scn.grid.x_max,
        n_cells=scn.grid.n_cells,
        rho_pieces=scn.data.rho_pieces, psi_pieces=scn.data.psi_pieces,
        z_inf=scn.data.z_inf, u_inf=scn.data.u_inf,
        t_final=scn.t_final)


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Copy cfg with known fields set from a flag dict; None values skipped."""
    known = {f.name for f in fields(RunConfig)}
    updates = {}
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config override {key!r}")
        updates[key] = val
    return replace(cfg, **updates)
