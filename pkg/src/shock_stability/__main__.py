"""Enable running as: python -m shock_stability"""

from shock_stability.main import app

app()
