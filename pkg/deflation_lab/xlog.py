import getpass
import os
import platform
import sys
import time

import numpy as np
import scipy

from deflation_lab.utils import version_string


class RunLog:
    """Plain-text record of one experiment run, written next to its tables."""

    def __init__(self, path=None):
        self._fd = None
        self.path = None
        if path is not None:
            self.fd = path

    @property
    def fd(self):
        return self._fd

    @fd.setter
    def fd(self, path):
        if path == self.path:
            return
        self.close()
        self.path = path
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self._fd = open(path, "w")
        self.logo()
        self.header()

    def __call__(self, *args, **kwargs):
        if self._fd is None:
            return
        flush = kwargs.pop("flush", False)
        print(*args, file=self._fd, **kwargs)
        if flush:
            self._fd.flush()

    def close(self):
        if self._fd is not None:
            self._fd.close()
            self._fd = None

    def logo(self):
        self(" deflation_lab ")

    def header(self):
        self()
        try:
            user = getpass.getuser()
        except (KeyError, OSError):
            user = "???"
        self("User:  ", user + "@" + platform.node())
        self("Date:  ", time.asctime())
        self("Arch:  ", platform.machine())
        self("Pid:   ", os.getpid())
        self("Python: {0}.{1}.{2}".format(*sys.version_info[:3]))
        self("deflation_lab:", version_string())
        self("numpy: ", np.__version__)
        self("scipy: ", scipy.__version__)
        self("\n")

    def print_dict(self, d, sep="    "):
        for key in sorted(d):
            self("{0}{1:18s}: {2}".format(sep, str(key), d[key]))
