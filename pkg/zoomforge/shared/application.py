import argparse
import asyncio

from loguru import logger

import zoomforge
from .errors import ConfigurationError
from .service import Service
from .utils import property_from_module


class Application:
    # the settings section holding [<name>.services] and [<name>.classes]
    name: str = "lab"

    def __init__(self, args: argparse.Namespace | None = None):
        self.args = args
        self.valid_services: list[Service] = []
        self.task_group = None
        self.exit_code = 0

    async def setup(self):
        await self.setup_services()

    async def setup_services(self):
        for k, v in zoomforge.SETTINGS.get(self.name.upper(), dict()).get("services", dict()).items():
            cls = property_from_module(v)
            srv = cls()
            zoomforge.SERVICES[k] = srv
            if srv.is_valid():
                self.valid_services.append(srv)

        self.valid_services.sort(key=lambda x: x.load_priority)
        for srv in self.valid_services:
            await srv.setup()

    async def run(self) -> int:
        self.valid_services.sort(key=lambda x: x.start_priority)
        try:
            async with asyncio.TaskGroup() as tg:
                self.task_group = tg
                for srv in self.valid_services:
                    tg.create_task(srv.run())
                self.exit_code = await self.start()
        finally:
            self.shutdown()
        return self.exit_code

    def shutdown(self):
        for srv in reversed(self.valid_services):
            srv.shutdown()
        self.valid_services.clear()

    async def start(self) -> int:
        """Execute the command named on the command line."""
        name = getattr(self.args, "command", None)
        if not (cls := zoomforge.COMMANDS.get(name)):
            raise ConfigurationError(f"Unknown command '{name}'.")
        logger.debug(f"Running command '{name}'")
        return await cls(self.args).execute()
