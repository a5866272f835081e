"""Exception types shared across the package.

Two failure families matter to callers (and to the CLI exit-code contract):
problems with input data versus problems arising inside numeric routines.
"""


class DataError(ValueError):
    """Input file or payload is malformed, inconsistent, or unusable.

    Messages carry a location (row index, byte offset, field name) whenever
    one exists, so a bad file can be fixed without bisecting it.
    """


class NumericError(ValueError):
    """A numeric contract was violated (zero norm, non-finite values, degenerate input)."""
