import argparse
import sys

import zoomforge
from zoomforge.shared.boot import startup
from zoomforge.shared.errors import ForgeError
from zoomforge.shared.utils import get_config, setup_commands, setup_registries


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1 like configuration errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser(commands: dict[str, type]) -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="zoomforge", description="Zoom coding and control simulation lab.")
    parser.add_argument("--version", action="version", version=f"zoomforge {zoomforge.__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None, help="TRACE, DEBUG, INFO, WARNING or ERROR")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=LabArgumentParser)
    sub.required = True
    for name in sorted(commands):
        cls = commands[name]
        child = sub.add_parser(
            name,
            parents=[common],
            help=cls.summary(),
            description=cls.__doc__,
            formatter_class=argparse.RawDescriptionHelpFormatter,
            aliases=list(cls.aliases),
        )
        cls.add_arguments(child)
        child.set_defaults(command=name)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        settings = get_config("lab")
        zoomforge.SETTINGS.update(settings)
        setup_registries(settings)
        commands = setup_commands(settings)
    except (ForgeError, ImportError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    args = build_parser(commands).parse_args(argv)
    try:
        return startup("lab", args)
    except ForgeError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code
    except KeyboardInterrupt:
        return 130
