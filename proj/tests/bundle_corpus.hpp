#pragma once

#include "qatlas/quantum_manifold.hpp"

#include <string>
#include <vector>

namespace qatlas::testutil {

struct CorpusEntry {
  std::string name;
  QuantumFibreBundle bundle;
  bool expect_basic_ok = true;
  bool expect_full_ok = true;
  bool expect_smooth = true;
  std::string violated_axiom;  // primary axiom label when not clean
};

// Hand-built bundles, at most four branches and small fibres, covering the
// clean cases and one seeded defect per axiom family.
std::vector<CorpusEntry> bundle_corpus();

// Axiom-by-axiom recheck written as plain nested loops over the raw bundle
// data, sharing no helpers with the library validators.
BundleReport brute_force_check(const QuantumFibreBundle& bundle);

}  // namespace qatlas::testutil
