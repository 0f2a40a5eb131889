from edgetrainer.cli import entrypoint

entrypoint()
