"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument left the mathematical domain of an operation."""


class TotalConflictError(ValueError):
    """Dempster combination attempted between fully conflicting masses."""


class ConfigError(ValueError):
    """A configuration file or value failed validation."""


class NonFiniteLossError(ArithmeticError):
    """Training produced a non-finite loss; carries location diagnostics."""

    def __init__(self, epoch: int, batch_index: int, term: str, value: float):
        self.epoch = epoch
        self.batch_index = batch_index
        self.term = term
        self.value = value
        super().__init__(
            f"non-finite loss ({value!r}) at epoch {epoch}, "
            f"batch {batch_index}, term {term!r}"
        )
