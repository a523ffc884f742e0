import argparse
import typing

from loguru import logger
from rich.console import Console

from .errors import ArtifactIOError, ForgeError


class Command:
    """
    Help not implemented for this command.
    """

    name = "!NOTSET!"
    help_category = "Uncategorized"
    aliases: list[str] = []
    # Set this to true if the command should exist but never reach the parser.
    unusable = False

    class Error(ForgeError):
        pass

    @classmethod
    def summary(cls) -> str:
        return (cls.__doc__ or "").strip().splitlines()[0] if cls.__doc__ else ""

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        """
        Declare the command's flags on its subparser.
        """
        pass

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.console = Console()
        self.errors = Console(stderr=True)

    def can_execute(self) -> bool:
        return True

    async def execute(self) -> int:
        """
        Execute the command and return the process exit code.
        """
        if not self.can_execute():
            self.send_error(f"{self.name} cannot run here.")
            return 1
        try:
            await self.func()
            return 0
        except ForgeError as err:
            self.send_error(f"{err}")
            logger.error(f"{self.name}: {err}")
            return err.exit_code
        except OSError as err:
            self.send_error(f"{err}")
            logger.exception(f"{self.name}: I/O failure")
            return ArtifactIOError.exit_code

    async def func(self) -> None:
        """
        Execute the command.
        """
        pass

    def send_line(self, text: str):
        self.console.print(text, markup=False, highlight=False, soft_wrap=True)

    def send_rich(self, *args, **kwargs):
        self.console.print(*args, **kwargs)

    def send_error(self, text: str):
        self.errors.print(f"error: {text}", markup=False, highlight=False, soft_wrap=True)


def is_command(obj: typing.Any) -> bool:
    return isinstance(obj, type) and issubclass(obj, Command) and obj.name != "!NOTSET!" and not obj.unusable
