"""dlab-plot: offline figures from dlab experiment CSVs."""

from .io import SchemaMismatch, read_table
from .render import PlotJob, fit_stretched, plot_convergence, plot_localization

__version__ = "0.1.0"
