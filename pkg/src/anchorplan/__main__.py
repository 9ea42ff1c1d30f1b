from anchorplan.cli import app

app()
