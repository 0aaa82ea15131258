"""Human-readable renderings of experiment outputs."""

from typing import Dict, Optional

import pandas as pd
from jinja2 import Template
from rich.console import Console
from rich.table import Table

from .harness import Example1D
from .selflearning import MinimaReport

EXAMPLE_1D_TEMPLATE_STR = '''
Labeled objects ({{ "%g" | format(ex.encoding.m) }} / {{ "%g" | format(ex.encoding.n) }} encoding):
{%- for x, t in labeled %}
  x = {{ "%g" | format(x) }}  target {{ "%g" | format(t) }}
{%- endfor %}
Unlabeled objects: {{ unlabeled or "none" }}

{{ "%-12s" | format("classifier") }} {{ "%12s" | format("boundary") }} {{ "%12s" | format("shift") }}
{%- for name, boundary in ex.boundaries.items() %}
{{ "%-12s" | format(name) }} {{ "%12.6g" | format(boundary) }} {{ "%12s" | format("-" if name == "supervised" else "%.6g" | format(ex.boundary_shift(name))) }}
{%- endfor %}
{%- if ex.has_unlabeled %}

Pseudo-targets after the first step:
{%- for name, targets in pseudo.items() %}
  {{ name }}: {{ targets }}
{%- endfor %}
{%- endif %}
'''

MINIMA_TEMPLATE_STR = '''
{{ report.variant.value }}: {{ report.n_distinct }} distinct minima from {{ report.n_runs }} runs
  ({{ report.n_restarts }} random restarts + supervised start, seed {{ report.seed }}{% if report.n_unconverged %}, {{ report.n_unconverged }} hit the iteration limit{% endif %})
{%- for m in report.distinct_minima %}
  #{{ loop.index }}  objective {{ "%.10g" | format(m.objective) }}  basin {{ m.basin_count }}  gap {{ "%.2e" | format(m.fixed_point_gap) }}
      w = [{{ weights[loop.index0] }}]
{%- endfor %}
'''

EXAMPLE_1D_TEMPLATE = Template(EXAMPLE_1D_TEMPLATE_STR)
MINIMA_TEMPLATE = Template(MINIMA_TEMPLATE_STR)


def _numbers(values) -> str:
    return ", ".join(f"{v:g}" for v in values)


def render_example_1d(example: Example1D) -> str:
    return EXAMPLE_1D_TEMPLATE.render(
        ex=example,
        labeled=list(zip(example.labeled_positions.tolist(), example.labeled_targets.tolist())),
        unlabeled=_numbers(example.unlabeled_positions),
        pseudo={k: _numbers(v) for k, v in example.pseudo_targets.items()},
    ).strip("\n")


def render_minima(reports: Dict[str, MinimaReport]) -> str:
    blocks = []
    for report in reports.values():
        weights = [", ".join(f"{v:.10g}" for v in m.weights) for m in report.distinct_minima]
        blocks.append(MINIMA_TEMPLATE.render(report=report, weights=weights).strip("\n"))
    return "\n\n".join(blocks)


def print_table(frame: pd.DataFrame, title: Optional[str] = None, console: Optional[Console] = None):
    """Print a data frame as a rich table; floats get 6 significant digits."""
    console = console or Console()
    table = Table(title=title)
    for column in frame.columns:
        justify = "right" if pd.api.types.is_numeric_dtype(frame[column]) else "left"
        table.add_column(str(column), justify=justify)
    for row in frame.itertuples(index=False):
        table.add_row(*[f"{v:.6g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)
