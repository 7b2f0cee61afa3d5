"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, sign, range)."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values or lost conditioning."""


class SimulationError(RuntimeError):
    """A stochastic run could not produce the requested statistic."""


class TrainingDivergedError(RuntimeError):
    """An optimizer left the finite-loss region.

    Carries the name of the dataset being fit so sweep drivers can flag
    the offending cell instead of aborting the whole experiment.
    """

    def __init__(self, dataset_name, message):
        self.dataset_name = dataset_name
        self.message = message
        super().__init__(f"training diverged on {dataset_name!r}: {message}")

    def __reduce__(self):
        # two-argument __init__ needs explicit pickle support, or the
        # exception cannot cross a worker-process boundary
        return (type(self), (self.dataset_name, self.message))


class ConfigError(ValueError):
    """An experiment config failed schema validation."""


class SchemaError(ValueError):
    """An emitted table does not match its declared column schema."""
