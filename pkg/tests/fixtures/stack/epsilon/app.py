"""Thin serving shim."""

# route table
ROUTES = {
    "/healthz": "ok",
    "/version": "0.1.0",
}
def lookup(path):
    return ROUTES.get(path)
def known_paths():
    return sorted(ROUTES)
STATUS = "ready"
