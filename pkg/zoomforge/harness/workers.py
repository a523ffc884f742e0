import asyncio
import typing
from concurrent.futures import Executor, ProcessPoolExecutor

from loguru import logger

import zoomforge
from zoomforge.estimators.trajectory import TrajectorySet
from zoomforge.shared.models.config import ExperimentConfig, load_experiment
from zoomforge.shared.service import Service
from zoomforge.shared.utils import ensure_registries


def replication_blocks(replications: int, workers: int) -> list[list[int]]:
    """Contiguous replication index blocks, one per worker at most."""
    count = max(1, min(workers, replications))
    size, extra = divmod(replications, count)
    blocks, start = [], 0
    for i in range(count):
        end = start + size + (1 if i < extra else 0)
        blocks.append(list(range(start, end)))
        start = end
    return blocks


def simulate_block(config_json: str, indices: list[int]) -> TrajectorySet:
    """
    Simulate the replications `indices` of a config. Runs inside worker
    processes, so it rebuilds everything from the serialized config.
    """
    from .experiment import build_components, simulate_replications

    ensure_registries()
    config = load_experiment(ExperimentConfig.model_validate_json(config_json).model_dump(mode="python"))
    parts = build_components(config)
    return simulate_replications(config, parts, indices)


def run_blocks(config: ExperimentConfig, executor: Executor | None = None) -> TrajectorySet:
    """
    Every replication of a config, split into blocks over the executor and
    merged in replication-index order. Without an executor, or with one
    block, everything runs inline.
    """
    blocks = replication_blocks(config.replications, config.workers)
    payload = config.model_dump_json()
    if executor is None or len(blocks) == 1:
        return TrajectorySet.concatenate([simulate_block(payload, b) for b in blocks])
    logger.info(f"Simulating {config.replications} replications in {len(blocks)} blocks.")
    return TrajectorySet.concatenate(list(executor.map(simulate_block, [payload] * len(blocks), blocks)))


class WorkerPoolService(Service):
    """
    Owns the process pool that replication blocks run on. The pool is
    created on first use with the requested worker count and replaced when
    a later run asks for a different count.
    """

    load_priority = -10

    def __init__(self):
        self.pool: ProcessPoolExecutor | None = None
        self.size = 0

    def executor(self, workers: int) -> Executor | None:
        if workers <= 1:
            return None
        if self.pool is not None and self.size != workers:
            self.pool.shutdown(wait=True)
            self.pool = None
        if self.pool is None:
            self.pool = ProcessPoolExecutor(max_workers=workers)
            self.size = workers
        return self.pool

    async def simulate(self, config: ExperimentConfig) -> TrajectorySet:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, run_blocks, config, self.executor(config.workers))

    async def call(self, func: typing.Callable, *args):
        """Run a blocking harness call off the event loop."""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, func, *args)

    def shutdown(self):
        if self.pool is not None:
            self.pool.shutdown(wait=True)
            self.pool = None


def worker_pool() -> WorkerPoolService | None:
    srv = zoomforge.SERVICES.get("workers")
    return srv if isinstance(srv, WorkerPoolService) else None
