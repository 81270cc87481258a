// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/checks/suites.hpp"

#include <chrono>
#include <cstring>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

#include <unistd.h>

#include "abslab/checks/gradcheck.hpp"
#include "abslab/checks/oracles.hpp"
#include "abslab/harness.hpp"
#include "abslab/kinship.hpp"
#include "abslab/model.hpp"
#include "abslab/numkit/ops.hpp"
#include "abslab/random.hpp"
#include "abslab/rules.hpp"

namespace abslab::checks {

namespace {

using Clock = std::chrono::steady_clock;

CheckResult Timed(std::string name,
                  const std::function<bool(std::ostringstream&)>& body) {
  CheckResult result;
  result.name = std::move(name);
  const auto start = Clock::now();
  std::ostringstream detail;
  try {
    result.passed = body(detail);
  } catch (const std::exception& e) {
    result.passed = false;
    detail << "exception: " << e.what();
  }
  result.seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  result.detail = detail.str();
  while (!result.detail.empty() &&
         (result.detail.back() == ' ' || result.detail.back() == ';')) {
    result.detail.pop_back();
  }
  return result;
}

nk::Tensor RandomTensor(nk::Shape shape, std::mt19937_64& rng,
                        double scale = 1.0) {
  nk::Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, scale);
  for (double& v : t.data()) v = normal(rng);
  return t;
}

std::size_t Dim(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct OpCase {
  std::string op;
  std::vector<nk::Tensor> inputs;
  LossBuilder build;
};

// One randomized case of op kind `kind`; reduction weights are drawn from a
// seed fixed per case so every evaluation sees the same loss.
OpCase MakeOpCase(int kind, std::mt19937_64& rng) {
  const std::uint64_t wseed = rng();
  auto reduce = [wseed](nk::Var x) {
    std::mt19937_64 w(wseed);
    return WeightedSum(x, w);
  };
  const std::size_t m = Dim(rng, 1, 4), n = Dim(rng, 1, 5), k = Dim(rng, 1, 4);
  OpCase c;
  switch (kind) {
    case 0:
      c.op = "matmul";
      c.inputs = {RandomTensor({m, k}, rng), RandomTensor({k, n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::matmul(v[0], v[1]));
      };
      break;
    case 1:
      c.op = "add";
      c.inputs = {RandomTensor({m, n}, rng), RandomTensor({m, n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::add(v[0], v[1]));
      };
      break;
    case 2:
      c.op = "mul";
      c.inputs = {RandomTensor({m, n}, rng), RandomTensor({m, n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::mul(v[0], v[1]));
      };
      break;
    case 3: {
      c.op = "scale";
      const double f = std::normal_distribution<double>(0.0, 2.0)(rng);
      c.inputs = {RandomTensor({m, n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::scale(v[0], f));
      };
      break;
    }
    case 4:
      c.op = "add_row";
      c.inputs = {RandomTensor({m, n}, rng), RandomTensor({n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::add_row(v[0], v[1]));
      };
      break;
    case 5:
      c.op = "relu";
      c.inputs = {RandomTensor({m, n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::relu(v[0]));
      };
      break;
    case 6:
      c.op = "softmax";
      c.inputs = {RandomTensor({m, n + 1}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::softmax(v[0]));
      };
      break;
    case 7:
      c.op = "layernorm";
      c.inputs = {RandomTensor({m, n + 1}, rng), RandomTensor({n + 1}, rng),
                  RandomTensor({n + 1}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::layernorm(v[0], v[1], v[2]));
      };
      break;
    case 8:
      c.op = "concat_last_axis";
      c.inputs = {RandomTensor({m, n}, rng), RandomTensor({m, k}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::concat_last_axis(v[0], v[1]));
      };
      break;
    case 9: {
      c.op = "embedding_lookup";
      const std::size_t rows = n + 1;
      std::vector<int> ids(m + 1);
      for (int& id : ids) id = static_cast<int>(Dim(rng, 0, rows - 1));
      c.inputs = {RandomTensor({rows, k}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::embedding_lookup(v[0], ids));
      };
      break;
    }
    case 10: {
      c.op = "softmax+cross_entropy";
      const std::size_t classes = n + 2;
      std::vector<int> targets(m + 1);
      for (int& t : targets) t = static_cast<int>(Dim(rng, 0, classes - 1));
      const int pad =
          targets.size() > 1 && targets[1] != targets[0] ? targets[0] : -1;
      c.inputs = {RandomTensor({m + 1, classes}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return nk::cross_entropy(nk::softmax(v[0]), targets, pad);
      };
      break;
    }
    case 11:
    case 12: {
      const bool causal = kind == 12;
      c.op = causal ? "attention(causal)" : "attention";
      const int heads = static_cast<int>(Dim(rng, 1, 2));
      const std::size_t width = heads * Dim(rng, 1, 3);
      const std::size_t tq = Dim(rng, 1, 4);
      const std::size_t tk = causal ? tq : Dim(rng, 1, 4);
      c.inputs = {RandomTensor({tq, width}, rng),
                  RandomTensor({tk, width}, rng),
                  RandomTensor({tk, width}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        return reduce(nk::attention(v[0], v[1], v[2], heads, causal));
      };
      break;
    }
    default: {
      c.op = "dropout";
      const std::uint64_t mask_seed = rng();
      c.inputs = {RandomTensor({m, n}, rng)};
      c.build = [=](nk::Tape&, std::span<const nk::Var> v) {
        std::mt19937_64 mask(mask_seed);
        return reduce(nk::dropout(v[0], 0.3, mask));
      };
      break;
    }
  }
  return c;
}

constexpr int kOpKinds = 14;

}  // namespace

CheckResult GradientSuite(const GradientOptions& options) {
  return Timed("gradients", [&](std::ostringstream& out) {
    std::mt19937_64 rng = MakeRng({options.seed, 0x6772});
    bool ok = true;
    double worst_op = 0.0;
    for (int i = 0; i < options.op_cases; ++i) {
      OpCase c = MakeOpCase(i % kOpKinds, rng);
      const GradCheckResult r = CheckGradients(c.inputs, c.build, options.op_step);
      worst_op = std::max(worst_op, r.max_rel_error);
      if (r.max_rel_error > options.op_tolerance) {
        ok = false;
        out << "op " << c.op << " case " << i << ": rel err "
            << r.max_rel_error << " at " << r.worst << "; ";
      }
    }
    out << options.op_cases << " op cases, max rel err " << worst_op << "; ";
    for (model::Strategy s : model::AllStrategies()) {
      std::mt19937_64 setup_rng = MakeRng({options.seed, 0x6d6f, 1});
      MicroSetup setup = MakeMicroSetup(setup_rng);
      model::Model m(MicroDims(), s, options.seed, setup.vocab.grounded_id());
      m.set_special_ids(setup.vocab.pad_id(), setup.vocab.bos_id(),
                        setup.vocab.eos_id());
      // Perturb away from the symmetric initialization so every parameter
      // receives a non-trivial gradient.
      std::mt19937_64 prng = MakeRng({options.seed, 0x6d6f, 2});
      for (model::Param& p : m.params()) {
        for (double& v : p.value.data()) {
          v += std::normal_distribution<double>(0.0, 0.3)(prng);
        }
      }
      const GradCheckResult r = CheckModelGradients(m, setup.example);
      out << model::StrategyName(s) << " " << r.max_rel_error << " ("
          << r.checked << "); ";
      if (r.max_rel_error > options.model_tolerance) {
        ok = false;
        out << "worst " << r.worst << "; ";
      }
    }
    return ok;
  });
}

CheckResult ParamAuditSuite() {
  return Timed("param-audit", [](std::ostringstream& out) {
    bool ok = true;
    std::vector<model::ModelDims> shapes{MicroDims(), model::ModelDims{}};
    shapes[1].v = 401;
    for (const model::ModelDims& dims : shapes) {
      const std::size_t e = dims.e, d = dims.d, v = dims.v;
      const std::size_t base =
          model::Model(dims, model::Strategy::kBaseline, 0).param_count();
      const std::pair<model::Strategy, std::size_t> expected[] = {
          {model::Strategy::kEmbSum, 0},
          {model::Strategy::kEmbCat, 2 * e * e + e},
          {model::Strategy::kEncSum, 0},
          {model::Strategy::kEncCat, 2 * d * d},
          {model::Strategy::kDecLoss, d * v},
      };
      for (const auto& [s, extra] : expected) {
        const std::size_t got =
            model::Model(dims, s, 0, 3).param_count() - base;
        out << model::StrategyName(s) << "(d=" << d << ",v=" << v
            << ") +" << got << "; ";
        if (got != extra) {
          ok = false;
          out << "expected +" << extra << "; ";
        }
      }
    }
    return ok;
  });
}

CheckResult DegeneracySuite(std::uint64_t seed) {
  return Timed("degeneracy", [seed](std::ostringstream& out) {
    std::mt19937_64 rng = MakeRng({seed, 0x6465});
    MicroSetup setup = MakeMicroSetup(rng);
    AbstractedExample plain = setup.example;
    plain.mask.assign(plain.x.size(), 0);

    auto logits = [&](const model::Model& m, const AbstractedExample& ex,
                      bool abs_head) {
      nk::Tape tape(false);
      model::Pass pass(m, tape, nullptr);
      nk::Var h = pass.decode(pass.memory(ex), m.decoder_input(ex.y));
      nk::Var z = abs_head ? pass.abs_logits(h) : pass.lm_logits(h);
      const auto data = z.value().data();
      return std::vector<double>(data.begin(), data.end());
    };
    auto bitwise = [](const std::vector<double>& a,
                      const std::vector<double>& b) {
      return a.size() == b.size() &&
             std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    };

    bool ok = true;
    for (std::uint64_t init = 0; init < 3; ++init) {
      model::Model base(MicroDims(), model::Strategy::kBaseline, seed + init);
      model::Model sum(MicroDims(), model::Strategy::kEmbSum, seed + init);
      for (model::Model* m : {&base, &sum}) {
        m->set_special_ids(setup.vocab.pad_id(), setup.vocab.bos_id(),
                           setup.vocab.eos_id());
      }
      if (!bitwise(logits(base, plain, false), logits(sum, plain, false))) {
        ok = false;
        out << "emb-sum with empty mask differs from baseline (init "
            << init << "); ";
      }
      model::Model dec(MicroDims(), model::Strategy::kDecLoss, seed + init);
      dec.set_special_ids(setup.vocab.pad_id(), setup.vocab.bos_id(),
                          setup.vocab.eos_id());
      if (!bitwise(logits(dec, setup.example, false),
                   logits(dec, setup.example, true))) {
        ok = false;
        out << "dec-loss heads differ at init (init " << init << "); ";
      }
    }
    if (ok) out << "3 initializations bitwise equal";
    return ok;
  });
}

CheckResult ProverOracleSuite(int theories, std::uint64_t seed) {
  return Timed("prover-oracle", [=](std::ostringstream& out) {
    std::mt19937_64 rng = MakeRng({seed, 0x7072});
    int mismatches = 0;
    std::size_t atoms = 0;
    int deepest = 0;
    for (int i = 0; i < theories; ++i) {
      const rules::Theory t = RandomTheory(rng);
      const rules::Closure fast = rules::ForwardChain(t);
      const std::map<rules::Atom, int> slow = NaiveClosure(t);
      bool same = fast.size() == slow.size();
      for (const auto& [atom, d] : slow) {
        auto it = fast.find(atom);
        if (it == fast.end() || it->second.depth != d) same = false;
        deepest = std::max(deepest, d);
      }
      // Each recorded derivation must be a valid one-step proof.
      for (const auto& [atom, d] : fast) {
        if (d.rule < 0) continue;
        int premise_depth = -1;
        for (const rules::Atom& p : d.premises) {
          auto it = fast.find(p);
          if (it == fast.end()) {
            same = false;
            break;
          }
          premise_depth = std::max(premise_depth, it->second.depth);
        }
        if (premise_depth + 1 != d.depth ||
            t.rules[d.rule].head.bind(d.binding) != atom) {
          same = false;
        }
      }
      const rules::QueryLabel a = rules::LabelQuery(fast, t.query);
      const rules::QueryLabel b = NaiveLabel(slow, t.query);
      if (a.label != b.label || a.depth != b.depth) same = false;
      atoms += slow.size();
      if (!same && ++mismatches <= 3) out << "theory " << i << " differs; ";
    }
    out << theories << " theories, " << atoms << " closure atoms, max depth "
        << deepest << ", " << mismatches << " mismatches";
    return mismatches == 0;
  });
}

CheckResult KinshipOracleSuite(int examples, std::uint64_t seed) {
  return Timed("kinship-oracle", [=](std::ostringstream& out) {
    const kinship::NamePool& pool = kinship::NamePool::Default();
    const RelationSchema& schema = RelationSchema::Default();
    std::mt19937_64 rng = MakeRng({seed, 0x6b69});
    int gold_bad = 0, edge_bad = 0, inversion_bad = 0;
    for (int i = 0; i < examples; ++i) {
      const int level = 2 + i % 9;
      const kinship::KinshipExample ex =
          kinship::SampleExample(level, pool, rng);
      auto holds = [&](int from, int to, Relation r) {
        return GenealogyRelations(ex.genealogy, ex.members[from])
            .contains({ex.members[to], r});
      };
      if (!holds(ex.e1, ex.e2, ex.gold) ||
          kinship::DeriveRelation(ex.graph, ex.e1, ex.e2) != ex.gold) {
        if (++gold_bad <= 3) {
          out << "level " << level << " gold " << schema.name(ex.gold)
              << " not confirmed; ";
        }
      }
      for (const kinship::FamilyEdge& e : ex.graph.edges) {
        if (!holds(e.from, e.to, e.relation)) ++edge_bad;
      }
      const Triple gold = ex.gold_triple();
      const auto [input, target] = kinship::Render(ex);
      if (kinship::ExtractTriple(target) != gold ||
          kinship::ExtractTriple(kinship::RenderAnswer(gold)) != gold) {
        ++inversion_bad;
      }
    }
    out << examples << " examples: " << gold_bad << " gold, " << edge_bad
        << " edge, " << inversion_bad << " inversion mismatches";
    return gold_bad == 0 && edge_bad == 0 && inversion_bad == 0;
  });
}

CheckResult ScoringSuite() {
  return Timed("scoring", [](std::ostringstream& out) {
    const RelationSchema& schema = RelationSchema::Default();
    const std::optional<Gender> genders[] = {Gender::kMale, Gender::kFemale,
                                             std::nullopt};
    int checked = 0, bad = 0;
    for (Relation rel : schema.all()) {
      for (const std::optional<Gender>& g : genders) {
        const Triple gold{"Ann", rel, "Ben"};
        const std::set<Relation> inverses = InverseOracle(rel, g);
        for (Relation cand : schema.all()) {
          const Triple forward{"Ann", cand, "Ben"};
          const Triple backward{"Ben", cand, "Ann"};
          const bool want_forward = cand == rel;
          const bool want_backward = inverses.contains(cand);
          checked += 2;
          if (kinship::ScoreKinship(forward, gold, g) != want_forward) ++bad;
          if (kinship::ScoreKinship(backward, gold, g) != want_backward) {
            if (++bad <= 3) {
              out << schema.name(rel) << " -> " << schema.name(cand)
                  << " misjudged; ";
            }
          }
        }
        // The same decision through the rendered-string path.
        Record record;
        record.task = Task::kKinship;
        record.gold = gold;
        record.e1_gender = g;
        for (Relation inv : inverses) {
          ++checked;
          const std::string text =
              kinship::RenderAnswer(Triple{"Ben", inv, "Ann"});
          if (harness::Score(record, text) != harness::Outcome::kCorrect) ++bad;
        }
      }
    }
    out << checked << " judgements, " << bad << " wrong";
    return bad == 0;
  });
}

CheckResult SplitFidelitySuite(std::uint64_t seed) {
  return Timed("split-fidelity", [seed](std::ostringstream& out) {
    bool ok = true;
    kinship::SplitConfig kc;
    kc.seed = seed;
    const kinship::Splits ks = kinship::BuildSplits(kc);
    std::set<int> train_levels;
    std::set<Triple> seen;
    for (const auto* part : {&ks.train, &ks.valid}) {
      for (const Record& r : *part) {
        train_levels.insert(r.bucket);
        seen.insert(*r.gold);
      }
    }
    std::size_t shared = 0, total = 0;
    std::set<int> test_levels;
    for (const auto& [level, records] : ks.test) {
      test_levels.insert(level);
      for (const Record& r : records) {
        ++total;
        shared += seen.contains(*r.gold) ? 1 : 0;
      }
    }
    const double overlap = total == 0 ? 1.0 : double(shared) / total;
    out << "kinship train levels";
    for (int l : train_levels) out << " " << l;
    out << ", " << test_levels.size() << " test buckets, overlap " << overlap
        << "; ";
    ok = ok && train_levels == std::set<int>{2, 4, 6};
    ok = ok && test_levels == std::set<int>{2, 3, 4, 5, 6, 7, 8, 9, 10};
    ok = ok && overlap <= 0.10;

    rules::SplitConfig rc;
    rc.seed = seed;
    const rules::Splits rs = rules::BuildSplits(rc);
    std::set<int> train_depths, test_depths;
    for (const auto* part : {&rs.train, &rs.valid}) {
      for (const Record& r : *part) train_depths.insert(r.bucket);
    }
    for (const auto& [depth, records] : rs.test) {
      if (!records.empty()) test_depths.insert(depth);
    }
    out << "rules train D0-D" << *train_depths.rbegin() << ", test D0-D"
        << *test_depths.rbegin();
    ok = ok && train_depths == std::set<int>{0, 1, 2};
    ok = ok && test_depths == std::set<int>{0, 1, 2, 3, 4, 5};
    return ok;
  });
}

CheckResult RoundTripSuite(std::uint64_t seed) {
  return Timed("round-trips", [seed](std::ostringstream& out) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("abslab-roundtrip-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    bool ok = true;

    std::vector<Record> records;
    std::mt19937_64 rng = MakeRng({seed, 0x7274});
    for (int i = 0; i < 20; ++i) {
      records.push_back(kinship::ToRecord(
          kinship::SampleExample(2 + i % 9, kinship::NamePool::Default(), rng),
          "test"));
      const int depth = i % (rules::kMaxDepth + 1);
      records.push_back(rules::ToRecord(
          rules::SampleTheory(depth, std::nullopt, rng), depth, "test"));
    }
    WriteJsonl(dir / "records.jsonl", records);
    const std::vector<Record> back = ReadJsonl(dir / "records.jsonl");
    int record_bad = back.size() == records.size() ? 0 : 1;
    for (std::size_t i = 0; i < std::min(back.size(), records.size()); ++i) {
      if (ToJsonLine(back[i]) != ToJsonLine(records[i])) ++record_bad;
    }
    out << records.size() << " records (" << record_bad << " changed); ";
    ok = ok && record_bad == 0;

    std::vector<const Record*> pointers;
    for (const Record& r : records) pointers.push_back(&r);
    const Vocabulary vocab = harness::BuildVocabulary(
        pointers, harness::SchemaFor(Task::kRules, 10),
        model::Strategy::kEmbCat);
    vocab.save(dir / "vocab.txt");
    const Vocabulary vocab_back = Vocabulary::Load(dir / "vocab.txt");
    const bool vocab_ok = vocab_back.size() == vocab.size() &&
                          vocab_back.hash() == vocab.hash() &&
                          vocab_back.tag_begin() == vocab.tag_begin() &&
                          vocab_back.grounded_id() == vocab.grounded_id();
    out << "vocab " << (vocab_ok ? "ok" : "changed") << "; ";
    ok = ok && vocab_ok;

    int ckpt_bad = 0;
    for (model::Strategy s : model::AllStrategies()) {
      model::ModelDims dims = MicroDims();
      dims.v = static_cast<int>(vocab.size());
      model::Model m(dims, s, seed, vocab.grounded_id());
      m.set_special_ids(vocab.pad_id(), vocab.bos_id(), vocab.eos_id());
      model::SaveCheckpoint(dir / "model.ckpt", m, vocab.hash());
      const model::LoadedModel loaded =
          model::LoadCheckpoint(dir / "model.ckpt", vocab.hash());
      const auto& a = m.params();
      const auto& b = loaded.model.params();
      bool same = a.size() == b.size() && loaded.model.strategy() == s &&
                  loaded.model.dims() == dims &&
                  loaded.model.eos_id() == m.eos_id();
      for (std::size_t i = 0; same && i < a.size(); ++i) {
        same = a[i].name == b[i].name &&
               a[i].value.shape() == b[i].value.shape() &&
               std::memcmp(a[i].value.raw(), b[i].value.raw(),
                           a[i].value.size() * sizeof(double)) == 0;
      }
      if (!same) ++ckpt_bad;
    }
    out << "checkpoints " << ckpt_bad << " of 6 changed";
    ok = ok && ckpt_bad == 0;
    fs::remove_all(dir);
    return ok;
  });
}

std::vector<CheckResult> RunAllSuites(std::uint64_t seed) {
  GradientOptions grad;
  grad.seed = seed;
  return {GradientSuite(grad),          ParamAuditSuite(),
          DegeneracySuite(seed),        ProverOracleSuite(500, seed),
          KinshipOracleSuite(1000, seed), ScoringSuite(),
          SplitFidelitySuite(seed),     RoundTripSuite(seed)};
}

}  // namespace abslab::checks
