"""Command-line pipeline: ingest -> train -> backtest -> compare -> report.

Every command reads one TOML config (sections [data], [env], [train],
[baselines.*]) plus ``--section.key=value`` overrides, and writes its
artifacts into the output directory along with ``manifest.json``.
"""

from __future__ import annotations

import argparse
import calendar
import copy
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import date
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .agent import DDPGAgent, TrainConfig, logs_to_csv, train
from .baselines import STRATEGY_ORDER, BaselineParams, make_strategy, run_strategy
from .data import AlignedPanel, DataError, load_panel
from .env import EnvConfig, observation_size, run_policy
from .metrics import MetricsReport, MetricsRow, build_report
from .nn import read_checkpoint
from .rng import SeedTree

log = logging.getLogger("ddpg_portfolio")

PANEL_FORMAT = "ddpg-portfolio-panel"
PANEL_VERSION = 1
DDPG_NAME = "DDPG"

# [baselines.<name>] key -> BaselineParams field
BASELINE_KEYS = {
    ("eg", "eta"): "eg_eta",
    ("olmar", "eps"): "olmar_eps",
    ("olmar", "window"): "olmar_window",
    ("pamr", "eps"): "pamr_eps",
    ("up", "samples"): "up_samples",
    ("anticor", "window"): "anticor_window",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    data_dir: str = "data"
    tickers: list[str] = field(default_factory=list)
    # month ("YYYY-MM") or day ("YYYY-MM-DD") bounds, both inclusive; None = panel edge
    train_start: str | None = "1999-07"
    train_end: str | None = "2016-07"
    backtest_start: str | None = None
    backtest_end: str | None = None
    env: EnvConfig = field(default_factory=EnvConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    baselines: BaselineParams = field(default_factory=BaselineParams)
    seed: int = 0
    out: str = "out"

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def cost_tag(self) -> str:
        return "cost" if self.env.cost_enabled else "nocost"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("data_dir", "tickers", "train_start", "train_end",
                                           "backtest_start", "backtest_end", "seed", "out")}
        d["env"] = asdict(self.env)
        d["train"] = self.train.to_dict()
        d["baselines"] = asdict(self.baselines)
        return d


# -- configuration


def _section_update(obj, values: dict, section: str):
    known = {f.name for f in fields(obj)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return replace(obj, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def build_config(doc: dict) -> RunConfig:
    """RunConfig from a parsed TOML document (all sections optional)."""
    doc = dict(doc)
    cfg = RunConfig()
    data = dict(doc.pop("data", {}))
    if "tickers" in data:
        cfg.tickers = [str(t) for t in data.pop("tickers")]
    for key in ("train_start", "train_end", "backtest_start", "backtest_end"):
        if key in data:
            value = data.pop(key)
            # TOML turns unquoted 2016-07-29 into a date; "" clears the bound
            setattr(cfg, key, str(value) if value not in (None, "") else None)
    if "dir" in data:
        cfg.data_dir = str(data.pop("dir"))
    if data:
        raise ConfigError(f"unknown key(s) in [data]: {', '.join(sorted(data))}")
    cfg.env = _section_update(cfg.env, doc.pop("env", {}), "env")
    train_values = dict(doc.pop("train", {}))
    if "epsilon_schedule" in train_values:
        train_values["epsilon_schedule"] = tuple(
            (None if b in (None, "inf", -1) else int(b), float(v)) for b, v in train_values["epsilon_schedule"])
    cfg.train = _section_update(cfg.train, train_values, "train")
    cfg.seed = cfg.train.seed
    flat = {}
    for name, values in doc.pop("baselines", {}).items():
        for key, value in values.items():
            if (name, key) not in BASELINE_KEYS:
                raise ConfigError(f"unknown baseline setting baselines.{name}.{key}")
            flat[BASELINE_KEYS[name, key]] = value
    cfg.baselines = _section_update(cfg.baselines, flat, "baselines")
    if "out" in doc:
        cfg.out = str(doc.pop("out"))
    if doc:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(doc))}")
    return cfg


def parse_override(text: str) -> tuple[list[str], object]:
    """``--train.epochs=5`` -> (["train", "epochs"], 5); values use TOML syntax, else strings."""
    if not text.startswith("--") or "=" not in text:
        raise ConfigError(f"unrecognised argument {text!r}; overrides look like --section.key=value")
    key, raw = text[2:].split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.replace("-", "_").split("."), value


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    doc = copy.deepcopy(doc)
    for text in overrides:
        path, value = parse_override(text)
        node = doc
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override {'.'.join(path)}")
        node[path[-1]] = value
    return doc


def load_config(path, overrides=(), seed=None, cost=None, out=None) -> RunConfig:
    doc = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    doc = apply_overrides(doc, list(overrides))
    if seed is not None:
        doc.setdefault("train", {})["seed"] = seed
    if cost is not None:
        doc.setdefault("env", {})["cost_enabled"] = cost
    if out is not None:
        doc["out"] = str(out)
    return build_config(doc)


# -- date ranges


def _bound(text: str, end: bool) -> date:
    parts = str(text).split("-")
    try:
        if len(parts) == 2:
            y, m = int(parts[0]), int(parts[1])
            return date(y, m, calendar.monthrange(y, m)[1] if end else 1)
        return date.fromisoformat(str(text))
    except ValueError:
        raise ConfigError(f"bad date bound {text!r}; use YYYY-MM or YYYY-MM-DD") from None


def resolve_range(dates: list[date], start, end, name: str = "range") -> tuple[int, int]:
    """Row indices ``(start_t, stop_t)`` for inclusive bounds.

    The requested period must overlap the panel at both ends, and ``start_t``
    is at least 1 because an observation needs the previous day's price.
    """
    if start is not None and _bound(start, end=True) < dates[0]:
        raise ConfigError(f"{name} start {start} precedes the panel ({dates[0]})")
    if end is not None and _bound(end, end=False) > dates[-1]:
        raise ConfigError(f"{name} end {end} is after the panel ({dates[-1]})")
    lo = 0 if start is None else next((i for i, d in enumerate(dates) if d >= _bound(start, False)), len(dates))
    hi = len(dates) - 1
    if end is not None:
        last = _bound(end, True)
        hi = max((i for i, d in enumerate(dates) if d <= last), default=-1)
    lo = max(lo, 1)
    if hi - lo < 1:
        raise ConfigError(f"{name} [{start}, {end}] holds fewer than two usable trading days")
    return lo, hi


# -- panel cache


def _rows(a) -> list:
    return [[float(v) for v in row] for row in a.tolist()]


def panel_to_json(panel: AlignedPanel) -> str:
    doc = {
        "format": PANEL_FORMAT,
        "version": PANEL_VERSION,
        "tickers": list(panel.tickers),
        "dates": [d.isoformat() for d in panel.dates],
        "dropped": int(panel.dropped),
        "prices": _rows(panel.prices),
        "rsi2": _rows(panel.rsi2),
        "simple_return": _rows(panel.simple_return),
        "log_return": _rows(panel.log_return),
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def panel_from_json(text: str) -> AlignedPanel:
    doc = json.loads(text)
    if doc.get("format") != PANEL_FORMAT or doc.get("version") != PANEL_VERSION:
        raise DataError("not a panel cache, or an unsupported version")
    m = len(doc["tickers"])

    def arr(key):
        return np.array(doc[key], dtype=float).reshape(-1, m)

    return AlignedPanel([date.fromisoformat(d) for d in doc["dates"]], doc["tickers"], arr("prices"),
                        arr("rsi2"), arr("simple_return"), arr("log_return"), doc["dropped"])


# -- artifacts


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Artifacts:
    """Writes files under the output directory and keeps the manifest current."""

    def __init__(self, cfg: RunConfig):
        self.root = cfg.out_dir
        self.root.mkdir(parents=True, exist_ok=True)
        self.path = self.root / "manifest.json"
        self.manifest = {"config": cfg.to_dict(), "inputs": {}, "artifacts": {}, "timings": {}}
        if self.path.exists():
            old = json.loads(self.path.read_text())
            for key in ("inputs", "artifacts", "timings"):
                self.manifest[key].update(old.get(key, {}))

    def write(self, name: str, data: str | bytes) -> Path:
        if isinstance(data, str):
            data = data.encode()
        path = self.root / name
        path.write_bytes(data)
        self.record(name)
        return path

    def record(self, name: str):
        data = (self.root / name).read_bytes()
        self.manifest["artifacts"][name] = {"sha256": sha256_bytes(data), "bytes": len(data)}

    def add_inputs(self, files: dict[str, bytes]):
        for name, data in sorted(files.items()):
            self.manifest["inputs"][name] = sha256_bytes(data)
        tree = "".join(f"{h}  {n}\n" for n, h in sorted(self.manifest["inputs"].items()) if n != "tree")
        self.manifest["inputs"]["tree"] = sha256_bytes(tree.encode())

    def save(self, command: str, seconds: float):
        self.manifest["timings"][command] = round(seconds, 3)
        self.path.write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n")


def read_panel_cache(cfg: RunConfig) -> AlignedPanel:
    path = cfg.out_dir / "panel.json"
    if not path.exists():
        raise ConfigError(f"no panel cache at {path}; run the ingest command first")
    return panel_from_json(path.read_text())


def curve_csv(dates, curves: dict[str, np.ndarray | None]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date"] + list(curves))
    for i, d in enumerate(dates):
        w.writerow([d.isoformat()] + ["" if c is None else repr(float(c[i])) for c in curves.values()])
    return buf.getvalue()


def read_curves_csv(text: str) -> tuple[list[date], dict[str, np.ndarray | None]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "date":
        raise DataError("curves file must start with a 'date' column")
    names = rows[0][1:]
    dates = [date.fromisoformat(r[0]) for r in rows[1:]]
    curves = {}
    for j, name in enumerate(names, start=1):
        col = [r[j] for r in rows[1:]]
        curves[name] = None if any(c == "" for c in col) else np.array(col, dtype=float)
    return dates, curves


# -- SVG


PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf")


def svg_plot(dates, curves: dict[str, np.ndarray | None], title: str = "", log_scale: bool = False,
             width: int = 900, height: int = 480) -> str:
    """Self-contained SVG line chart of equity curves against trading days."""
    left, right, top, bottom = 80, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    live = {k: v for k, v in curves.items() if v is not None and len(v)}
    tf = np.log10 if log_scale else (lambda v: np.asarray(v, dtype=float))
    ys = np.concatenate([tf(v) for v in live.values()]) if live else np.array([0.0, 1.0])
    lo, hi = float(ys.min()), float(ys.max())
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    n = max(len(dates) - 1, 1)

    def px(i):
        return left + pw * i / n

    def py(v):
        return top + ph * (1.0 - (v - lo) / (hi - lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{left}" y="{top - 15}" font-size="15">{_esc(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        label = f"{10 ** v:,.0f}" if log_scale else f"{v:,.0f}"
        y = py(v)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">{label}</text>')
    if dates:
        for i in sorted({0, len(dates) // 2, len(dates) - 1}):
            out.append(f'<text x="{px(i):.2f}" y="{top + ph + 18}" text-anchor="middle">{dates[i].isoformat()}</text>')
    for k, (name, values) in enumerate(curves.items()):
        color = PALETTE[k % len(PALETTE)]
        ly = top + 10 + 18 * k
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        suffix = "" if name in live else " (failed)"
        out.append(f'<text x="{left + pw + 38}" y="{ly + 4}">{_esc(name + suffix)}</text>')
        if name in live:
            pts = " ".join(f"{px(i):.2f},{py(v):.2f}" for i, v in enumerate(tf(values).tolist()))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# -- commands


def cmd_ingest(cfg: RunConfig) -> AlignedPanel:
    if not cfg.tickers:
        raise ConfigError("[data] tickers is empty")
    t0 = time.perf_counter()
    art = Artifacts(cfg)
    panel = load_panel(cfg.data_dir, cfg.tickers)
    art.add_inputs({f"{t}.csv": (Path(cfg.data_dir) / f"{t}.csv").read_bytes() for t in cfg.tickers})
    art.write("panel.json", panel_to_json(panel))
    art.save("ingest", time.perf_counter() - t0)
    print(f"panel: T={panel.T} M={panel.M} dropped={panel.dropped} "
          f"({panel.dates[0]} to {panel.dates[-1]}), observation size {observation_size(panel.M)}")
    return panel


def cmd_train(cfg: RunConfig) -> DDPGAgent:
    t0 = time.perf_counter()
    panel = read_panel_cache(cfg)
    start_t, stop_t = resolve_range(panel.dates, cfg.train_start, cfg.train_end, "train range")
    art = Artifacts(cfg)
    art.add_inputs({"panel.json": (cfg.out_dir / "panel.json").read_bytes()})
    log.info("training on %s .. %s (%d days)", panel.dates[start_t], panel.dates[stop_t], stop_t - start_t + 1)
    agent, logs = train(panel, cfg.env, cfg.train, start_t, stop_t)
    agent.save(cfg.out_dir / "agent.ckpt", {
        "tickers": list(panel.tickers),
        "train_range": [panel.dates[start_t].isoformat(), panel.dates[stop_t].isoformat()],
        "env": asdict(cfg.env),
    })
    art.record("agent.ckpt")
    art.write("train_log.csv", logs_to_csv(logs))
    art.save("train", time.perf_counter() - t0)
    print(f"trained {cfg.train.epochs} epochs; final episode value {logs[-1].final_value:,.2f}")
    return agent


def load_agent(cfg: RunConfig, panel: AlignedPanel, checkpoint=None) -> DDPGAgent:
    path = Path(checkpoint) if checkpoint else cfg.out_dir / "agent.ckpt"
    if not path.exists():
        raise ConfigError(f"no checkpoint at {path}; run the train command first")
    header, _ = read_checkpoint(path)
    meta = header.get("meta", {})
    if meta.get("m") != panel.M or meta.get("tickers", panel.tickers) != list(panel.tickers):
        raise ConfigError(f"checkpoint was trained on {meta.get('tickers')} (M={meta.get('m')}); "
                          f"panel has {panel.tickers} (M={panel.M})")
    return DDPGAgent.load(path)


def backtest_range(cfg: RunConfig, panel: AlignedPanel) -> tuple[int, int]:
    return resolve_range(panel.dates, cfg.backtest_start, cfg.backtest_end, "backtest range")


def in_sample(cfg: RunConfig, panel: AlignedPanel, bt: tuple[int, int]) -> bool:
    try:
        tr = resolve_range(panel.dates, cfg.train_start, cfg.train_end, "train range")
    except ConfigError:
        return False
    return bt[0] <= tr[1] and tr[0] <= bt[1]


def cmd_backtest(cfg: RunConfig, checkpoint=None) -> np.ndarray:
    t0 = time.perf_counter()
    panel = read_panel_cache(cfg)
    agent = load_agent(cfg, panel, checkpoint)
    start_t, stop_t = backtest_range(cfg, panel)
    values, total_cost, _ = run_policy(panel, agent.policy, cfg.env, start_t, stop_t)
    art = Artifacts(cfg)
    name = f"curve_ddpg_{cfg.cost_tag}.csv"
    art.write(name, curve_csv(panel.dates[start_t:stop_t + 1], {DDPG_NAME: values}))
    art.save(f"backtest_{cfg.cost_tag}", time.perf_counter() - t0)
    print(f"backtest {panel.dates[start_t]} to {panel.dates[stop_t]}: final value {values[-1]:,.2f}, "
          f"transaction costs {total_cost:,.2f}")
    return values


def run_all(cfg: RunConfig, panel: AlignedPanel, agent: DDPGAgent, start_t: int, stop_t: int):
    """DDPG and every baseline on one panel and one EnvConfig; failures map to None."""
    seeds = SeedTree(cfg.seed).child("baselines")
    curves, costs, errors = {}, {}, {}
    runners = [(DDPG_NAME, lambda: run_policy(panel, agent.policy, cfg.env, start_t, stop_t))]
    for kind in STRATEGY_ORDER:
        def runner(kind=kind):
            strategy = make_strategy(kind, panel.M, cfg.baselines, seeds.generator(kind.value))
            return run_strategy(strategy, panel, cfg.env, start_t, stop_t)
        runners.append((kind.value, runner))
    for name, runner in runners:
        try:
            values, cost, _ = runner()
            curves[name], costs[name] = values, cost
        except Exception as exc:  # one strategy failing must not abort the comparison
            log.warning("%s failed: %s", name, exc)
            curves[name], errors[name] = None, f"{type(exc).__name__}: {exc}"
    return curves, costs, errors


def write_report(art: Artifacts, dates, curves, errors: dict, tag: str, header: str, log_scale: bool = False):
    ok = [(k, v) for k, v in curves.items() if v is not None]
    built = {r.name: r for r in build_report(ok).rows} if ok else {}
    rows = [built.get(k) or MetricsRow(k, errors={m: errors.get(k, "failed") for m in
                                                  ("carr", "sharpe", "sharpe_daily", "mdd", "mdd_peak")})
            for k in curves]
    report = MetricsReport(rows)
    text = header + "\n" + report.to_text()
    for name, msg in errors.items():
        text += f"{name}: ERROR {msg}\n"
    art.write(f"report_{tag}.csv", report.to_csv())
    art.write(f"report_{tag}.txt", text)
    art.write(f"equity_{tag}.svg", svg_plot(dates, curves, header, log_scale))
    return report


def cmd_compare(cfg: RunConfig, checkpoint=None, log_scale: bool = False):
    t0 = time.perf_counter()
    panel = read_panel_cache(cfg)
    agent = load_agent(cfg, panel, checkpoint)
    start_t, stop_t = backtest_range(cfg, panel)
    curves, costs, errors = run_all(cfg, panel, agent, start_t, stop_t)
    dates = panel.dates[start_t:stop_t + 1]
    art = Artifacts(cfg)
    tag = cfg.cost_tag
    art.write(f"curves_{tag}.csv", curve_csv(dates, curves))
    header = (f"{dates[0]} to {dates[-1]}, costs {'on' if cfg.env.cost_enabled else 'off'}"
              + (" (in-sample: overlaps the training range)" if in_sample(cfg, panel, (start_t, stop_t)) else ""))
    report = write_report(art, dates, curves, errors, tag, header, log_scale)
    art.write(f"costs_{tag}.csv", "strategy,total_cost\n" + "".join(
        f"{k},{'' if k not in costs else repr(float(costs[k]))}\n" for k in curves))
    art.save(f"compare_{tag}", time.perf_counter() - t0)
    print(header)
    print(report.to_text(), end="")
    return report


def cmd_report(cfg: RunConfig, curves_path=None, log_scale: bool = False):
    t0 = time.perf_counter()
    path = Path(curves_path) if curves_path else cfg.out_dir / f"curves_{cfg.cost_tag}.csv"
    if not path.exists():
        raise ConfigError(f"no curves file at {path}; run the compare command first")
    dates, curves = read_curves_csv(path.read_text())
    art = Artifacts(cfg)
    errors = {k: "no curve" for k, v in curves.items() if v is None}
    header = f"{dates[0]} to {dates[-1]}, from {path.name}"
    report = write_report(art, dates, curves, errors, cfg.cost_tag, header, log_scale)
    art.save(f"report_{cfg.cost_tag}", time.perf_counter() - t0)
    print(report.to_text(), end="")
    return report


# -- entry point


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, help="master seed (overrides train.seed)")
    common.add_argument("--cost", dest="cost", action="store_true", default=None, help="enable transaction costs")
    common.add_argument("--no-cost", dest="cost", action="store_false", help="disable transaction costs")
    common.add_argument("--out", help="output directory")
    common.add_argument("-q", "--quiet", action="store_true", help="only warnings and errors on stderr")

    p = argparse.ArgumentParser(prog="ddpg-portfolio", description=__doc__.splitlines()[0],
                                epilog="Any config value can be overridden with --section.key=value, "
                                       "e.g. --train.epochs=5 or --baselines.olmar.eps=5.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="parse CSVs into an aligned panel cache")
    sub.add_parser("train", parents=[common], help="train the agent on the training range")
    bt = sub.add_parser("backtest", parents=[common], help="roll the greedy policy over the backtest range")
    bt.add_argument("--checkpoint")
    cmp_ = sub.add_parser("compare", parents=[common], help="DDPG against the seven baselines")
    cmp_.add_argument("--checkpoint")
    cmp_.add_argument("--log-scale", action="store_true")
    rep = sub.add_parser("report", parents=[common], help="metrics and plot from a curves CSV")
    rep.add_argument("--curves")
    rep.add_argument("--log-scale", action="store_true")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, extra, args.seed, args.cost, args.out)
        if args.command == "ingest":
            cmd_ingest(cfg)
        elif args.command == "train":
            cmd_train(cfg)
        elif args.command == "backtest":
            cmd_backtest(cfg, args.checkpoint)
        elif args.command == "compare":
            cmd_compare(cfg, args.checkpoint, args.log_scale)
        else:
            cmd_report(cfg, args.curves, args.log_scale)
    except (ConfigError, DataError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
