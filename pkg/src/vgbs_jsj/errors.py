"""Exception types raised by the lattice kernel, the graph model and the pipeline."""


class VgbsError(ValueError):
    """Base class for every error raised by this package."""


class NotContained(VgbsError):
    pass


class NotRepresentable(VgbsError):
    pass


class NotCorankOne(VgbsError):
    pass


class NotSaturated(VgbsError):
    pass


class NotUnimodular(VgbsError):
    pass


class UnsupportedVertexKind(VgbsError):
    pass


class NotOneOneLoop(VgbsError):
    pass


class NotTwoTwoEdge(VgbsError):
    pass


class NotIndexTwo(VgbsError):
    pass


class NotReduced(VgbsError):
    pass


class WitnessInvalid(VgbsError):
    def __init__(self, condition: str):
        super().__init__(f"witness invalid: {condition}")
        self.condition = condition


class NoDeficiencyOne(VgbsError):
    pass


class RankTooSmall(VgbsError):
    pass


class ParamError(VgbsError):
    pass


class ParseError(VgbsError):
    """Malformed document; ``diagnostics`` holds (json-path, message) pairs."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        text = "; ".join(f"{path}: {msg}" for path, msg in self.diagnostics)
        super().__init__(text or "parse error")


class ValidationError(VgbsError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class AdjacencyViolation(AssertionError):
    """Two adjacent candidate edges were both judged not universally elliptic.

    This cannot happen for a correct implementation; it is raised as a hard
    internal error rather than silently collapsing both edges.
    """
