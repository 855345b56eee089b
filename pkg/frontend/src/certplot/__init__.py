"""certplot: charts for causalcert experiment result CSVs."""

from .io import PlotInputError, ResultTable, check_contract, read_result_csv
from .render import FIGURE_KINDS, PlotSpec, RenderInfo, render

__version__ = "0.1.0"
