class Service:
    """
    A long-lived helper owned by the Application, e.g. the worker pool.
    Services are set up in load_priority order, run in start_priority order
    and shut down when the command finishes.
    """

    load_priority: int = 0
    start_priority: int = 0

    def is_valid(self):
        return True

    async def setup(self):
        pass

    async def run(self):
        pass

    def shutdown(self):
        pass
