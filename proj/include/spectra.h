#ifndef SPECTRA_H
#define SPECTRA_H

/* Stable C surface over the workbench library.
 *
 * Every command takes its inputs as text (the same formats the file loaders
 * use), runs one analysis or construction, and hands back an opaque result
 * carrying two strings: `records`, the line-delimited machine-readable
 * report, and `summary`, a short human paragraph. Records are the contract;
 * the summary is not. Commands return SPECTRA_OK and set *out on success.
 * On failure they return a status code, leave *out NULL, and stash a
 * message retrievable with spectra_last_error() (thread-local).
 *
 * Record lines start with a type token; `copy <event>` lines, stripped of
 * the prefix, replay verbatim through the session log reader.
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  SPECTRA_OK = 0,
  SPECTRA_ERR_ARG = 1,       /* null/contradictory arguments, bad enum value */
  SPECTRA_ERR_PARSE = 2,     /* input text failed to parse */
  SPECTRA_ERR_STRUCTURE = 3, /* inputs parsed but a structural contract broke */
  SPECTRA_ERR_BUDGET = 4,    /* a step/query budget ran out mid-computation */
  SPECTRA_ERR_INTERNAL = 5,
};

typedef struct spectra_result spectra_result;

const char* spectra_result_records(const spectra_result* r);
const char* spectra_result_summary(const spectra_result* r);
void spectra_result_free(spectra_result* r);

/* Message for the last failing call on this thread ("" if none). */
const char* spectra_last_error(void);

/* Decompose the prefix [0,n) of f into blocks and catalog the types seen.
 * Exactly one of spec_text (block-spec records) and program_text (register
 * machine computing f) must be non-NULL; `budget` is the per-evaluation step
 * budget for the program form (0 picks a default). A prefix that fails to
 * decompose yields SPECTRA_ERR_STRUCTURE with the failing position in the
 * error message. */
int spectra_decompose(const char* spec_text, const char* program_text, uint64_t n,
                      uint64_t budget, spectra_result** out);

/* Shape classification of the prefix [0,n): almost-constant / almost-identity
 * / mixed at threshold n/4, characteristic-set calls for 0/1 data, plus
 * block-decomposability and f-closed initial segment lengths. */
int spectra_classify(const char* spec_text, const char* program_text, uint64_t n,
                     uint64_t budget, spectra_result** out);

/* Build the copy scheduled by `schedule_text` (one op per stage, `stages`
 * many, each evaluation capped at `budget` steps), then recover the
 * <-successor of the element named x using only less/fimg queries, at most
 * `budget` of them. SPECTRA_ERR_BUDGET when the probe budget runs out. */
int spectra_recover(const char* spec_text, const char* schedule_text, uint64_t x,
                    uint64_t stages, uint64_t budget, spectra_result** out);

/* Finite-injury construction of a block function defeating every program in
 * catalog_text (`program <name>` headers, instructions below each; NULL or
 * empty text = empty catalog) as a would-be preimage-counting function. */
int spectra_injury_finite(const char* catalog_text, uint64_t stages, uint64_t max_length,
                          spectra_result** out);

/* Tree construction against one requirement (phi, psi, W). phi_text and
 * psi_text are oracle programs; wset_text is an entry schedule
 * (`at <stage> add <element>` lines). pair_rule: 0 = preimage-left,
 * 1 = leftmost-maps-right. Every stopped attack slot is re-verified from the
 * event log and the verdict recorded. */
int spectra_injury_tree(const char* spec_text, const char* phi_text, const char* psi_text,
                        const char* wset_text, uint64_t stages, uint64_t m_cap,
                        int pair_rule, spectra_result** out);

/* Encode a c.e. set into a copy of (omega,<): marker pairs stay adjacent
 * exactly off the set. The set comes from wset_text (entry schedule) or,
 * when that is NULL, from catalog_text as a toy halting set
 * { i : catalog[i](i) halts within `stages` steps }. */
int spectra_encode_ce(const char* wset_text, const char* catalog_text, uint64_t stages,
                      spectra_result** out);

/* Encode a scripted Delta_2 approximation (`approx <e> init=<0|1>
 * [flips=<comma list>]` lines) into a copy of the block function in
 * spec_text; 2-cycle marker patterns carry the bits. */
int spectra_encode_delta2(const char* approx_text, const char* spec_text, uint64_t stages,
                          spectra_result** out);

/* Rebuild a notation system's value assignment from its successor program
 * alone and compare against the bundle's own (HINT/FORWARD/BACKWARD)
 * assignment; also check succ for acceptability along the bundle. */
int spectra_translate(const char* bundle_text, const char* succ_text, uint64_t budget,
                      spectra_result** out);

#ifdef __cplusplus
}
#endif

#endif /* SPECTRA_H */
