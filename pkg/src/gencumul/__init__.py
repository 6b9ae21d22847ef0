"""Generalized cumulative constraint with timetable filtering.

A small trail-based constraint engine, conditional interval variables,
cumulative-function expressions, the timetabling propagator, a brute-force
oracle and three benchmark models.
"""

from .cumul import CumulTask, always_in, flatten, ge, le, pulse, step, step_at_end, step_at_start, total
from .dzn import ParseError, dump_dzn, parse_dzn
from .engine import BoolVar, Engine, Inconsistency, IntVar, Propagator, SearchStats
from .instances import MespInstance, RcpspCprInstance, SmicInstance, generate_mesp, parse_instance
from .interval import IntervalVar, make_interval
from .models import build_mesp, build_rcpsp_cpr, build_smic, check_solution
from .timetable import ALL_RULES, FORBID_ONLY, GeneralizedCumulative, RuleFlags, initialize_timeline, timetable_filter

__version__ = "0.1.0"
