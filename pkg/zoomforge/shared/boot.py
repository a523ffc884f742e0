import argparse

from zoomforge.shared.utils import get_config, run_program


async def main(mode: str, args: argparse.Namespace) -> int:
    settings = get_config(mode)
    return await run_program(mode, settings, args)


def startup(mode: str, args: argparse.Namespace) -> int:
    run = None
    try:
        from uvloop import run
    except ImportError:
        from asyncio import run
    return run(main(mode, args))
