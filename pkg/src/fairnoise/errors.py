"""Exception hierarchy shared across the package.

Split by how the CLI maps failures to exit codes: bad inputs exit 2,
violated contracts (a witness or certificate that does not hold) exit 1.
"""


class FairnoiseError(Exception):
    """Base class for all package errors."""


class InputError(FairnoiseError):
    """Invalid argument, config, or precondition violation."""


class ContractError(FairnoiseError):
    """A guarantee that should hold by construction failed to hold."""


class InfeasibleError(FairnoiseError):
    """A grid search found no point satisfying the fairness tolerance."""
