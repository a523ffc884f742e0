from rich.console import Console
from rich.table import Table

from zoomforge.shared.models.reports import BoundReport, CapacityResult


def bound_table(report: BoundReport, title: str = "Bound report") -> Table:
    table = Table(title=title)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for name, value in report.rows():
        style = "bold red" if value == "VIOLATED" else None
        table.add_row(name, value, style=style)
    return table


def capacity_table(rows: list[tuple[str, CapacityResult]]) -> Table:
    table = Table(title="Channel capacity")
    table.add_column("channel")
    table.add_column("C (bits/use)", justify="right")
    table.add_column("iterations", justify="right")
    table.add_column("gap", justify="right")
    table.add_column("converged")
    for name, result in rows:
        table.add_row(
            name,
            f"{result.capacity:.9f}",
            str(result.iterations),
            f"{result.gap:.2e}",
            "yes" if result.converged else "NO",
        )
    return table


def render_text(renderable, width: int = 100) -> str:
    """Plain text of a rich renderable, without colour codes."""
    console = Console(width=width, color_system=None)
    with console.capture() as capture:
        console.print(renderable)
    return capture.get()


def report_lines(report: BoundReport) -> list[str]:
    """`name: value` lines, one per row of the report."""
    return [f"{name}: {value}" for name, value in report.rows()]
