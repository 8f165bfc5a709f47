#ifndef CUNTZLAB_PIPELINE_HPP
#define CUNTZLAB_PIPELINE_HPP

#include <string>
#include <utility>

#include <json.hpp>

#include "cuntzlab/systems.hpp"
#include "cuntzlab/unitary.hpp"

namespace cuntzlab {

// Reports preserve key insertion order so that consecutive runs are
// byte-identical; nothing in a report depends on wall clock, locale,
// allocation addresses or hash iteration order.
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Exact JSON forms of the core value types
// ---------------------------------------------------------------------------

// Integers fitting a 64-bit signed value serialize as JSON numbers, larger
// ones as decimal strings; parsing accepts both.
Json int_to_json(const Int& v);
Int int_from_json(const Json& j);

// {"breakpoints": ["1/4", ...], "intervals": ["1", "inf", ...],
//  "points": [...]} with exact rational and extended-natural strings, no
// floats.  Serialization canonicalizes so equal functions have equal forms.
Json stepfn_to_json(const StepFn& f);
StepFn stepfn_from_json(const Json& j);

// Classification classes serialize as tagged objects:
//   finite groups     {"finite": [3]} / {"free": 1, "torsion": [2]}
//   localizations     {"localized": [2, 3]}
//   formal sums       {"formalSum": {"parts": [...], "rule": {...}}}
// Output-only; reports also carry the display string alongside.
Json class_to_json(const GroupClass& c);

// Parameter files: {"primes": [2,3,5,7], "exponents": [2,3,4,5],
// "densePoints": ["1/2","1/3"], "stages": 4}.  A file may list fewer dense
// points than stages; the loader pads with the standard alternating
// dyadic/triadic enumeration, skipping points already present, so the
// two-point example above reproduces the standard four-stage set exactly.
// Serialization always lists the full padded sequence.
Json params_to_json(const SystemParams& p);
SystemParams params_from_json(const Json& j);

// Abstract-model files: {"kind": "finite", "name": ..., "labels": [...],
// "zero": 0, "unit": 2 | null, "add": [[...]], "leq": [[...]],
// "wayBelow": [[...]]} or {"kind": "pair", "gMax": 4, "kMax": 3}.  The
// loader checks table shapes and index ranges and throws ParseError on
// malformed input; deeper laws are the business of abstract_validate.
Json model_to_json(const AbstractCuModel& m);
AbstractCuModel model_from_json(const Json& j);

// FNV-1a 64-bit over the given bytes, as 16 hex digits.  Used to fingerprint
// the exact configuration echoed into a report.
std::string content_hash(const std::string& bytes);

// ---------------------------------------------------------------------------
// Run configuration and report envelope
// ---------------------------------------------------------------------------

struct RunConfig {
  SystemParams params = standard_params(4);
  IntertwineMode mode = IntertwineMode::ExhaustiveFirst;
  int nMax = 2;
  Int lambdaCeiling = Int(2000000);

  // The exact configuration object echoed into every report (with the full
  // padded dense-point list); the report's content hash is the hash of this
  // echo's dump.
  Json echo() const;
};

// Reads the "params" file object plus optional "mode", "nMax",
// "lambdaCeiling" keys.  A bare parameter object (with "primes" at top
// level) is accepted, too.
RunConfig config_from_json(const Json& j);

// Exit-code contract: 0 pass, 1 negative result, 2 config error,
// 3 undecidable comparison, 4 resource limit.  Commands return the report
// plus the code; mapping exceptions from malformed input to code 2 is the
// binary's business.
struct CmdResult {
  Json report;
  int exitCode = 0;
};

// ---------------------------------------------------------------------------
// Commands (library form; the CLI binary is flag parsing around these)
// ---------------------------------------------------------------------------

// Stage/block/morphism inventory of both variants.  Rejects parameter sets
// with r_0 < 2 up front (InvalidParams): the certified-distance route can
// never close there, so such configs fail fast rather than deep inside a
// run.
CmdResult cmd_build(const RunConfig& cfg);

// Per-ideal (K0, K1) tables of both variants, algebra-level classes and the
// isomorphism verdicts.  Exit 0 iff K0 and K1 are both isomorphic, 3 when a
// comparison is undecidable, 1 otherwise.
CmdResult cmd_ktheory(const RunConfig& cfg);

// Approximate-intertwining conditions up to nMax with j_n = n.  Exit 0 iff
// every condition passes, 4 when the lambda ceiling limited a sweep, 1
// otherwise.
CmdResult cmd_intertwine(const RunConfig& cfg);

// Simple-ideal classification tables and the matching obstruction; `self`
// matches the first variant against itself.  Exit 0 iff infeasibility is
// certified, 1 when a perfect matching exists, 3 when rows are undecidable.
CmdResult cmd_obstruct(const RunConfig& cfg, bool self = false);

// Structural laws plus the axiom suite on one abstract model.  Exit 0 iff
// every checked axiom holds, 1 otherwise.
CmdResult cmd_axioms(const AbstractCuModel& m);

// Step-function rendering: format "text" (cell listing plus bar sketch) or
// "svg" (exact-coordinate plot; open circles mark interval values at
// endpoints excluded by a lower point value).  Throws InvalidParams on
// unknown formats.
std::string render_stepfn(const StepFn& f, const std::string& format);

// The full verification pipeline in one report: build, K-theory,
// intertwining, obstruction (standard and self), and the axiom suite over
// the shipped models with the weak-cancellation implication.  Exit code is
// the worst of the sections (4 resource > 3 undecidable > 1 negative > 0).
CmdResult run_pipeline(const RunConfig& cfg);

// Serialized report with trailing newline, the exact bytes the CLI writes.
std::string report_bytes(const Json& report);

}  // namespace cuntzlab

#endif
