"""Exception hierarchy shared by every emlab module."""


class EmlabError(Exception):
    """Base class for all emlab errors."""


class SingularMatrix(EmlabError, ValueError):
    pass


class NotPsd(EmlabError, ValueError):
    pass


class NotOrthogonal(EmlabError, ValueError):
    pass


class NotPositiveDefinite(EmlabError, ValueError):
    pass


class NotUnit(EmlabError, ValueError):
    pass


class BadGrade(EmlabError, ValueError):
    pass


class BadParam(EmlabError, ValueError):
    pass


class BadShape(EmlabError, ValueError):
    pass


class ConformalCase(EmlabError, ValueError):
    """Trace inversion of the reduced Dirichlet tensor is undefined when p == n."""


class NotInImage(EmlabError, ValueError):
    pass


class DomainViolation(EmlabError, ValueError):
    pass


class InvalidConnection(EmlabError, ValueError):
    pass


class OutsideHull(EmlabError, ValueError):
    pass


class StageLimit(EmlabError, ValueError):
    pass


class BoxOutsideDomain(EmlabError, ValueError):
    pass


class NotALaminate(EmlabError, ValueError):
    pass
