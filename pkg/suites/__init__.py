from .base_suite import BaseSuite, CheckOutcome, CheckRecord, SuiteResult
from .suite_clt import CLTSuite
from .suite_divergence import DivergenceSuite
from .suite_mixing import MixingSuite
from .suite_moments import MomentsSuite
from .suite_nontight import NonTightSuite
from .suite_variance import VarianceSuite

SUITES = {
    suite.name: suite
    for suite in (
        CLTSuite,
        NonTightSuite,
        VarianceSuite,
        MixingSuite,
        MomentsSuite,
        DivergenceSuite,
    )
}

__all__ = [
    "BaseSuite",
    "CheckOutcome",
    "CheckRecord",
    "SuiteResult",
    "SUITES",
]
