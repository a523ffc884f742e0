import typing

__version__ = "0.1.0"

SETTINGS = dict()
APP = None
CLASSES = dict()
SERVICES = dict()

COMMANDS: dict[str, type] = dict()

# name -> SystemModel subclass, filled from [dynamics.models]
MODEL_CLASSES: dict[str, type] = dict()
# name -> Coder subclass, filled from [codec.kinds]
CODER_CLASSES: dict[str, type] = dict()
# name -> ChannelModel builder, filled from [channel.kinds]
CHANNEL_KINDS: dict[str, typing.Callable] = dict()
# name -> callable usable inside b(T) threshold expressions
THRESHOLD_FUNCS: dict[str, typing.Callable] = dict()

# lark parser for b(T) expressions and its cache of parsed trees.
THRESHOLD_PARSER = None
THRESHOLD_CACHE: dict[str, typing.Any] = dict()
