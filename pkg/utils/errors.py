class FemtoPauliError(Exception):
    '''
    Base class for every error the simulator raises on purpose.

    Attributes:
        category (str): machine-readable category, printed first by the commands.
        exit_code (int): process exit code used by the management commands.
    '''
    category = 'internal'
    exit_code = 1

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def as_dict(self):
        return {'category': self.category, 'message': self.message, **self.context}


class ConfigurationError(FemtoPauliError):
    category = 'configuration'
    exit_code = 2


class GridMismatchError(ConfigurationError):
    pass


class MissingSnapshotError(ConfigurationError):
    pass


class StabilityError(FemtoPauliError):
    '''
    Raised when a time step breaks the norm-drift bound. `context` carries the
    offending time stamp and the per-orbital drift.
    '''
    category = 'stability'
    exit_code = 3


class SolverError(FemtoPauliError):
    category = 'solver'
    exit_code = 4


class OutputError(FemtoPauliError):
    category = 'io'
    exit_code = 5


class ValidationFailure(FemtoPauliError):
    category = 'validation'
    exit_code = 6
