# cli.py
"""Command registry and dispatcher.

Command modules under ``commands/`` register handlers on the shared ``app``
(see ``config.py``) with ``@app.command(...)``; ``dispatch`` parses argv,
merges options (argument defaults < ``--config`` file < explicit flags), runs
the handler and writes a run manifest next to the output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from core import DurkitError, FormatError, PhonemeInventory, UsageError, WorkerPool

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
MANIFEST_FORMAT = "durkit-manifest"
GLOBAL_OPTIONS = ("config", "seed", "jobs", "out", "log_level", "inventory", "silence")


def arg(*flags, **kwargs):
    """Declare one command option; mirrors ``ArgumentParser.add_argument``."""
    return flags, kwargs


@dataclass
class Command:
    name: str
    handler: object
    args: tuple
    help: str = ""
    required: tuple = ()
    defaults: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Run:
    """Everything a handler needs: resolved options, output sink, manifest bookkeeping."""

    command: str
    options: dict
    file_config: dict
    version: str
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    stdout: object = None

    def __getattr__(self, name):
        try:
            return self.__dict__["options"][name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def inventory(self) -> PhonemeInventory:
        path = self.options.get("inventory")
        silence = self.options.get("silence")
        if path:
            self.inputs.append(str(path))
            return PhonemeInventory.from_file(path, silence=silence)
        return PhonemeInventory.arpabet(silence=silence)

    def input(self, path) -> Path:
        p = Path(path)
        if not p.exists():
            raise FormatError("no such file or directory", path=p)
        self.inputs.append(str(p))
        return p

    def emit(self, text: str):
        """Write text output to --out, or stdout."""
        from formats import write_text

        out = self.options.get("out")
        if out:
            write_text(out, text)
            self.outputs.append(str(out))
        else:
            (self.stdout or sys.stdout).write(text)

    def output_path(self) -> Path:
        out = self.options.get("out")
        if not out:
            raise UsageError(f"{self.command}: --out is required")
        self.outputs.append(str(out))
        return Path(out)

    def map(self, fn, items) -> list:
        """Ordered map over utterances; a process pool when --jobs > 1."""
        with WorkerPool(self.options.get("jobs", 1)) as pool:
            return pool.map(fn, items)

    def manifest(self, wall_time: float) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "toolkit_version": self.version,
            "subcommand": self.command,
            "options": {k: _jsonable(v) for k, v in sorted(self.options.items()) if k != "config"},
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seed": self.options.get("seed"),
            "wall_time_s": round(wall_time, 3),
        }


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _load_config_file(path, command: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}:{e.lineno}: invalid JSON config ({e.msg})") from None
    if not isinstance(obj, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    if obj.get("format") == MANIFEST_FORMAT:
        if obj.get("subcommand") != command:
            raise UsageError(f"{path}: manifest was written by {obj.get('subcommand')!r}, not {command!r}")
        return dict(obj.get("options", {}))
    return obj


class Toolkit:
    def __init__(self, name: str, version: str, defaults: dict | None = None, ledger_path=None):
        self.name = name
        self.version = version
        self.defaults = dict(defaults or {})
        self.ledger_path = ledger_path
        self.commands = {}

    # ---------------- Registration ----------------
    def command(self, name: str, *args, help: str = "", required=()):
        def decorator(fn):
            defaults = {}
            for flags, kwargs in args:
                if "default" in kwargs:
                    dest = kwargs.get("dest") or flags[0].lstrip("-").replace("-", "_")
                    defaults[dest] = kwargs["default"]
            self.commands[name] = Command(name, fn, tuple(args), help, tuple(required), defaults)
            return fn

        return decorator

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(prog=self.name, description="Phoneme-duration alignment, analysis and modification.")
        parser.add_argument("--version", action="version", version=f"{self.name} {self.version}")
        sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
        for cmd in self.commands.values():
            p = sub.add_parser(cmd.name, help=cmd.help, description=cmd.help)
            g = p.add_argument_group("global options")
            g.add_argument("--config", help="JSON file of option values (explicit flags win)")
            g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
            g.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
            g.add_argument("--out", default=argparse.SUPPRESS, help="output path (default stdout); <out>.manifest.json is written beside it, stdout runs log the manifest")
            g.add_argument("--log-level", default=argparse.SUPPRESS)
            g.add_argument("--inventory", default=argparse.SUPPRESS, help="phoneme list, one symbol per line")
            g.add_argument("--silence", default=argparse.SUPPRESS, help="silence symbol if distinct from [space]")
            for flags, kwargs in cmd.args:
                kwargs = {k: v for k, v in kwargs.items() if k != "default"}
                kwargs.setdefault("default", argparse.SUPPRESS)
                p.add_argument(*flags, **kwargs)
        return parser

    # ---------------- Dispatch ----------------
    def resolve(self, argv) -> Run:
        parser = self.build_parser()
        ns = vars(parser.parse_args(argv))
        name = ns.pop("command", None)
        if name is None:
            raise UsageError(f"{self.name}: missing subcommand (choose from {', '.join(sorted(self.commands))})")
        cmd = self.commands[name]
        file_config = _load_config_file(ns["config"], name) if ns.get("config") else {}
        options = {**self.defaults, **cmd.defaults}
        allowed = set(options) | set(GLOBAL_OPTIONS) | {
            kw.get("dest") or flags[0].lstrip("-").replace("-", "_") for flags, kw in cmd.args
        }
        options.update({k: v for k, v in file_config.items() if k in allowed})
        options.update({k: v for k, v in ns.items() if v is not None})
        missing = [r for r in cmd.required if options.get(r) in (None, "")]
        if missing:
            flags = ", ".join("--" + m.replace("_", "-") for m in missing)
            raise UsageError(f"{self.name} {name}: missing required option(s) {flags}")
        if int(options.get("jobs", 1)) < 1:
            raise UsageError("--jobs must be >= 1")
        return Run(name, options, file_config, self.version)

    def dispatch(self, argv=None, stdout=None) -> int:
        """Run one subcommand; 0 on success, 1 on usage errors, 2 on data errors."""
        argv = list(sys.argv[1:] if argv is None else argv)
        started = time.perf_counter()
        try:
            run = self.resolve(argv)
            run.stdout = stdout
            level = run.options.get("log_level")
            if level:
                logging.getLogger().setLevel(str(level).upper())
            self.commands[run.command].handler(run)
        except SystemExit as e:  # --help / --version
            return e.code if isinstance(e.code, int) else EXIT_OK
        except UsageError as e:
            logger.error("%s", e)
            return EXIT_USAGE
        except DurkitError as e:
            logger.error("%s", e)
            return EXIT_DATA
        except OSError as e:
            logger.error("%s: %s", e.filename or "<io>", e.strerror or e)
            return EXIT_DATA

        manifest = run.manifest(time.perf_counter() - started)
        out = run.options.get("out")
        if out:
            path = Path(str(out) + ".manifest.json")
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        else:
            # stdout runs have nowhere to put the manifest file
            logger.info("manifest %s", json.dumps(manifest, sort_keys=True))
        if self.ledger_path:
            self._record(manifest)
        logger.info("✅ %s finished in %.2fs", run.command, manifest["wall_time_s"])
        return EXIT_OK

    def _record(self, manifest: dict):
        from database import Database

        db = Database(self.ledger_path)
        try:
            run_id = db.add_run(manifest)
            db.log_event("finished", run_id=run_id, details=manifest["subcommand"])
            logger.debug("ledger run %d recorded (%d total)", run_id, db.get_total_runs())
        finally:
            db.close()
