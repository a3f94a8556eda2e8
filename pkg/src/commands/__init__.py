# Command line subcommands, one module per command

from . import debias, report, simulate, verify

COMMANDS = (simulate, verify, debias, report)

__all__ = ['COMMANDS', 'debias', 'report', 'simulate', 'verify']
