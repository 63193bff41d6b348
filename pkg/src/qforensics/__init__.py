"""Link-quality forensics from transpiled quantum circuits."""

__version__ = "0.1.0"
