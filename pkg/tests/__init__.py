from .test_approx_core import TestApproxCore
from .test_inverse import TestInverse
from .test_reference_oracle import TestReferenceOracle
from .test_error_analysis import TestErrorAnalysis
from .test_cli import TestCli
