"""Bundled config presets, addressable by bare name (``--config isentropic_g2``)."""
