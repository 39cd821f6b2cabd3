'''
Exception types shared across the toolkit. Each carries a readable
`message` and the exit code the command line reports for it.
'''

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_NONCONVERGENCE = 4


class InvalidParameterException(Exception):
    '''
    Raised when a parameter lies outside its domain.
    '''
    exit_code = EXIT_VALIDATION

    def __init__(self, name, value, reason):
        self.message = f'Invalid {name}={value!r}: {reason}.'
        self.name = name
        self.value = value
        self.reason = reason
        super().__init__(self.message, self.name, self.value, self.reason)


class ConfigValidationException(Exception):
    '''
    Raised when a configuration file or override fails strict validation.
    '''
    exit_code = EXIT_VALIDATION

    def __init__(self, path, reason):
        self.message = f'Invalid configuration at \'{path}\': {reason}.'
        self.path = path
        self.reason = reason
        super().__init__(self.message, self.path, self.reason)


class InfeasibleGainException(Exception):
    '''
    Raised when no attack parameters reproduce the requested gain.
    '''
    exit_code = EXIT_INFEASIBLE

    def __init__(self, target_gain, max_gain):
        self.message = (f'Target gain {target_gain:.6g} is not reachable; the attack '
                        f'achieves at most {max_gain:.6g}.')
        self.target_gain = target_gain
        self.max_gain = max_gain
        super().__init__(self.message, self.target_gain, self.max_gain)


class SolverConvergenceException(Exception):
    '''
    Raised when a discrimination solver fails to produce a valid measurement.
    '''
    exit_code = EXIT_NONCONVERGENCE

    def __init__(self, solver, restarts, best_residual):
        self.message = (f'{solver} did not converge after {restarts} restarts '
                        f'(best residual {best_residual:.3g}).')
        self.solver = solver
        self.restarts = restarts
        self.best_residual = best_residual
        super().__init__(self.message, self.solver, self.restarts, self.best_residual)
