"""
Fehlerklassen für lulc2label.

Jede Klasse trägt den Exit-Code, den die CLI bei einem unbehandelten Fehler
dieses Typs zurückgibt.
"""

from .config import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_NUMERICAL_ERROR


class Lulc2LabelError(Exception):
    """Basisklasse aller fachlichen Fehler."""

    exit_code: int = 1


class ConfigError(Lulc2LabelError):
    """Ungültige oder unvollständige Konfiguration."""

    exit_code = EXIT_CONFIG_ERROR


class DataError(Lulc2LabelError, ValueError):
    """Eingabedaten verletzen eine Vorbedingung (Form, Wertebereich, Format)."""

    exit_code = EXIT_DATA_ERROR


class TiffFormatError(DataError):
    """Beschädigte oder nicht unterstützte TIFF-Datei."""


class RleFormatError(DataError):
    """Ungültige RLE-Maske."""


class NumericalError(Lulc2LabelError, ArithmeticError):
    """Numerisches Versagen (NaN, leere Konfusionsmatrix, ...)."""

    exit_code = EXIT_NUMERICAL_ERROR
