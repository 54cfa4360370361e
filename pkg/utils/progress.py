from typing import Optional
from rich.progress import (
    BarColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn
)
from .log import console


__all__ = ["format_metric", "MetricColumn", "make_progress", "advance"]


def format_metric(value: Optional[float], precision: Optional[int] = 3) -> str:
    if value is None:
        return "[orange3]???"
    magnitude = abs(value)
    if magnitude != 0 and (magnitude >= 1e4 or magnitude < 1e-2):
        return f"{value:.{precision}e}"
    return f"{value:.{precision}f}"


class MetricColumn(TextColumn):
    """
    Renders the `metric` field of a task, e.g. the best fitness so far.
    """
    def __init__(self, label: Optional[str] = "best"):
        super().__init__(text_format="{task.completed}/{task.total}", justify="left")
        self.label = label

    def render(self, task):
        value = task.fields.get("metric", None)
        if task.finished:
            return f"{self.label}={format_metric(value)} [green]✔"
        return f"{self.label}={format_metric(value)}"


def make_progress(metric_label: Optional[str] = "best") -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        MetricColumn(label=metric_label),
        TimeElapsedColumn(),
        console=console,
        transient=False
    )


def advance(
        progress_host: Optional[Progress],
        task,
        metric: Optional[float] = None
) -> None:
    """
    Advance a task on an optional progress host; no-op without a host.
    """
    if progress_host is None or task is None:
        return
    if metric is None:
        progress_host.update(task, advance=1)
    else:
        progress_host.update(task, advance=1, metric=metric)
