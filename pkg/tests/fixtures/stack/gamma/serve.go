package gamma

import "fmt"

// Route binds a path to a handler name.
type Route struct {
	Path    string
	Handler string
}
// DefaultRoutes serves health and inference.
func DefaultRoutes() []Route {
	return []Route{
		{Path: "/healthz", Handler: "health"},
		{Path: "/infer", Handler: "infer"},
	}
}
func Describe(r Route) string {
	return fmt.Sprintf("%s -> %s", r.Path, r.Handler)
}
/* limits are per replica */
const MaxConcurrent = 64
const MaxQueueDepth = 512
func WithinLimits(active, queued int) bool {
	if active > MaxConcurrent {
		return false
	}
	return queued <= MaxQueueDepth
}
var ready = true
var version = "0.1.0"
