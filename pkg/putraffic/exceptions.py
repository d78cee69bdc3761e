"""Exception hierarchy"""


class TrafficError(Exception):
    """Base class for every error raised by putraffic"""


class TrafficDomainError(TrafficError, ValueError):
    """Argument outside the domain where the model is defined"""


class EnumerationCapacityError(TrafficDomainError):
    """Exhaustive enumeration requested above its configured cap"""


class DegenerateInformationError(TrafficError, ArithmeticError):
    """Fisher information matrix is singular at the requested point"""


class ConfigError(TrafficError):
    """Invalid sweep configuration or command-line arguments"""


class VerificationError(TrafficError):
    """An identity or oracle check failed"""
