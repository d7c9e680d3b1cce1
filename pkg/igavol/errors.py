''' exceptions raised by igavol '''

__all__ = ['DomainError', 'DataError', 'ConvergenceWarning']


class DomainError(ValueError):
	''' an argument lies outside the domain where the operation is defined (times out of a grid, negative variance, invalid parameters ...) '''

class DataError(DomainError):
	''' an input file does not parse or does not follow the expected schema '''

class ConvergenceWarning(UserWarning):
	''' an optimizer exhausted its budget, the best point found is returned anyway '''
