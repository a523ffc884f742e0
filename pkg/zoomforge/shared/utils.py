import importlib
import hashlib
import sys
import time
import types
import typing
from pathlib import Path
from inspect import getmembers, getmodule

import numpy as np
import orjson
from loguru import logger

import zoomforge
from .errors import ConfigurationError


def setup_logging(name: str, level: str = "INFO", log_dir: str | Path | None = "logs"):

    logformat = {
        "format": "{time} - {level} - {message}",
        "backtrace": True,
        "diagnose": True,
        "level": level,
    }

    handlers = [{"sink": sys.stderr, "colorize": True, **logformat}]
    if log_dir:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        handlers.append(
            {
                "sink": str(Path(log_dir) / f"{name}.log"),
                "serialize": True,
                "compression": "zip",
                **logformat,
            }
        )
    logger.configure(handlers=handlers)


async def setup_program(program: str, settings: dict, args=None):
    logging = settings.get("LOGGING", dict())
    level = getattr(args, "log_level", None) or logging.get("level", "INFO")
    setup_logging(program, level=level.upper(), log_dir=logging.get("dir", "logs"))

    for k, v in settings.get(program.upper(), dict()).get("classes", dict()).items():
        zoomforge.CLASSES[k] = property_from_module(v)

    setup_registries(settings)


async def run_program(program: str, settings: dict, args=None) -> int:
    zoomforge.SETTINGS.update(settings)

    await setup_program(program, settings, args)

    app_class = zoomforge.CLASSES["application"]
    app = app_class(args)
    zoomforge.APP = app
    await app.setup()
    return await app.run()


def setup_commands(settings: dict) -> dict[str, type]:
    """
    Fill zoomforge.COMMANDS from [cli.commands]; every value is a module whose
    public Command subclasses are loaded under their name.
    """
    from .commands import is_command

    for k, v in settings.get("CLI", dict()).get("commands", dict()).items():
        for obj in callables_from_module(v).values():
            if is_command(obj):
                zoomforge.COMMANDS[obj.name] = obj
    return zoomforge.COMMANDS


def _config_roots() -> list[Path]:
    package_root = Path(__file__).resolve().parents[1]
    return [
        Path.cwd() / "config",
        package_root / "config",
        package_root.parent / "config",
    ]


def get_config(mode: str = "lab") -> dict:
    from dynaconf import Dynaconf

    for root_path in _config_roots():
        if (root_path / "default.toml").exists():
            break
    else:
        raise ConfigurationError("config/default.toml not found next to zoomforge.")

    files = [root_path / "default.toml"]

    # plugin files are applied in lexicographical order.
    plugin_files = sorted(Path.cwd().glob("plugin-*.toml"))
    files.extend(plugin_files)

    for f in (
        "user",
        f"user-{mode}",
        "secrets",
        f"secrets-{mode}",
    ):
        if Path(f"{f}.toml").exists():
            files.append(f"{f}.toml")

    d = Dynaconf(settings_files=[str(f) for f in files])

    return d.to_dict()


def load_experiment_file(path: str | Path) -> dict:
    """
    Read an experiment TOML file through dynaconf.

    Dynaconf upper-cases top-level keys; experiment files are written in
    lowercase so they are folded back here. Values can be overridden from the
    environment with the ZOOMFORGE_ prefix, e.g. ZOOMFORGE_HORIZON=500.
    """
    from dynaconf import Dynaconf

    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Experiment config {path} does not exist.")
    d = Dynaconf(settings_files=[str(path)], envvar_prefix="ZOOMFORGE")
    return {k.lower(): v for k, v in d.to_dict().items()}


def mod_import(module):
    """
    A generic Python module loader.

    Args:
        module (str, module): A Python path in dot-notation or an already
            imported module object.

    Returns:
        (module or None): An imported module, or None if the import failed.
    """
    if not module:
        return None

    if isinstance(module, types.ModuleType):
        return module

    try:
        return importlib.import_module(module)
    except ImportError:
        logger.error(f"Could not import module '{module}'")
        return None


def callables_from_module(module) -> dict[str, typing.Callable]:
    """
    Return all global-level callables defined in a module.

    Args:
        module (str, module): A python-path to a module or an actual
            module object.

    Returns:
        callables (dict): A dict of {name: callable, ...} from the module.

    Notes:
        Will ignore callables whose names start with underscore "_".
    """
    mod = mod_import(module)
    if not mod:
        return {}
    # only callables actually defined in this module, not imports
    members = getmembers(
        mod, predicate=lambda obj: callable(obj) and getmodule(obj) == mod
    )
    return dict((key, val) for key, val in members if not key.startswith("_"))


def property_from_module(path: str) -> typing.Any:
    """
    Return a property (variable, constant, class, etc.) from a module, given
    the property's full python path.

    Args:
        path (str): path.to.module:property
    """
    if not path or ":" not in path:
        raise ImportError("Path is not in module:property format!")
    module_path, property_name = path.split(":", 1)
    module = importlib.import_module(module_path)
    return getattr(module, property_name)


def setup_registries(settings: dict):
    """
    Fill the process-wide registries from the settings tables.

    [dynamics.models], [codec.kinds] and [channel.kinds] map a short name to a
    module:attr path. [estimators.threshold_funcs] and [cli.commands] map a key
    to a module whose public callables are all loaded; the key only matters
    for overrides.
    """
    for k, v in settings.get("DYNAMICS", dict()).get("models", dict()).items():
        zoomforge.MODEL_CLASSES[k] = property_from_module(v)

    for k, v in settings.get("CODEC", dict()).get("kinds", dict()).items():
        zoomforge.CODER_CLASSES[k] = property_from_module(v)

    for k, v in settings.get("CHANNEL", dict()).get("kinds", dict()).items():
        zoomforge.CHANNEL_KINDS[k] = property_from_module(v)

    for k, v in settings.get("ESTIMATORS", dict()).get("threshold_funcs", dict()).items():
        for name, func in callables_from_module(v).items():
            zoomforge.THRESHOLD_FUNCS[name] = func


def ensure_registries():
    """
    Library use without the CLI: load the default settings on first need.
    """
    if zoomforge.MODEL_CLASSES and zoomforge.CODER_CLASSES and zoomforge.CHANNEL_KINDS:
        return
    if not zoomforge.SETTINGS:
        zoomforge.SETTINGS.update(get_config())
    setup_registries(zoomforge.SETTINGS)


def canonical_json(data: typing.Any) -> bytes:
    return orjson.dumps(
        data, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
    )


def canonical_hash(data: typing.Any) -> str:
    return hashlib.sha256(canonical_json(data)).hexdigest()


def derive_seed(base: int, index: int) -> int:
    """
    Replication seed mixing: seed_i = SeedSequence((base, i)) squeezed to 64
    bits. Equal (base, i) always gives the same seed; neighbouring indices
    give unrelated streams.
    """
    seq = np.random.SeedSequence([int(base), int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


class LogTime:
    def __init__(self, message, level="INFO"):
        """
        :param message: The message to log (e.g. "Simulating 20 replications")
        :param level: The log level (TRACE, DEBUG, INFO, etc.)
        """
        self.message = message
        self.level = level
        self.start_time = None
        self.duration = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        end_time = time.perf_counter()
        self.duration = end_time - self.start_time
        logger.log(self.level, f"{self.message} took {self.duration:.6f} seconds")
