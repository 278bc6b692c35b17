// Copyright 2026 The HAT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hat/serialize.hpp"

#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "hat/error.hpp"

namespace hat {
namespace {

namespace fs = std::filesystem;

Dataset small_data() {
  SceneConfig c;
  c.tracks = 4;
  c.frames = 8;
  return generate_dataset(c, NoiseConfig{}, 2, 3);
}

Provenance prov() { return {"0.1.0", "0123456789abcdef", 42}; }

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

TEST(FormatDouble, RoundTripsExactly) {
  for (double v : {0.1, -1e-300, 3.141592653589793, 1e22, 0.0, 123456.789}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Scenes, JsonLinesRoundTrip) {
  const Dataset data = small_data();
  const std::string text = scenes_to_jsonl(data, prov(), {{"data_hash", "abc"}});
  const SceneFile f = scenes_from_jsonl(text);
  EXPECT_EQ(f.provenance.seed, 42u);
  EXPECT_EQ(f.provenance.config_hash, "0123456789abcdef");
  EXPECT_EQ(f.header.value("data_hash", ""), "abc");
  ASSERT_EQ(f.scenes.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    ASSERT_EQ(f.scenes[s].frames(), 8u);
    ASSERT_EQ(f.scenes[s].tracks.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(f.scenes[s].tracks[k].regime, data.scenes[s].tracks[k].regime);
      for (std::size_t t = 0; t < 8; ++t) {
        const Anchor a = f.scenes[s].ground_truth(k, t);
        const Anchor b = data.scenes[s].ground_truth(k, t);
        const Anchor& oa = f.observations[s].anchors[k][t];
        const Anchor& ob = data.observations[s].anchors[k][t];
        for (std::size_t d = 0; d < kAnchorDim; ++d) {
          EXPECT_NEAR(a[d], b[d], 1e-9);
          EXPECT_EQ(oa[d], ob[d]);
        }
      }
    }
  }
  // Samples built from the reloaded data match the originals.
  Dataset reloaded;
  reloaded.scenes = f.scenes;
  reloaded.observations = f.observations;
  const auto x = build_samples(data);
  const auto y = build_samples(reloaded);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].features.values().size(); ++j)
      EXPECT_NEAR(x[i].features.values()[j], y[i].features.values()[j], 1e-9);
  }
}

TEST(Scenes, SerializationIsDeterministic) {
  EXPECT_EQ(scenes_to_jsonl(small_data(), prov()), scenes_to_jsonl(small_data(), prov()));
}

TEST(Scenes, RejectsMalformedInput) {
  EXPECT_THROW(scenes_from_jsonl(""), ValidationError);
  EXPECT_THROW(scenes_from_jsonl("{\"type\":\"frame\"}\n"), ValidationError);
  std::string text = scenes_to_jsonl(small_data(), prov());
  EXPECT_THROW(scenes_from_jsonl(text + "not json\n"), ValidationError);
  const std::string header = first_line(text);
  EXPECT_THROW(scenes_from_jsonl(header + "\n"), ValidationError);
}

TEST(Csv, HeadersCarryProvenance) {
  EvalReport report;
  report.rows.push_back({"hat", "all", {3, 0.5, 0.4, 0.01, 0.2}});
  report.rows.push_back({"hat", "cv", {3, 0.5, 0.4, 0.01, 0.2}});
  const std::string eval = eval_to_csv(report, prov());
  EXPECT_EQ(first_line(eval),
            "version,config_hash,seed,method,regime,count,mean_translation,median_translation,"
            "mean_yaw,mean_velocity");
  EXPECT_NE(eval.find("0.1.0,0123456789abcdef,42,hat,all,3,0.5,0.4,0.01,0.2"), std::string::npos);
  EXPECT_EQ(first_line(compare_to_csv(report, prov())), "version,config_hash,seed,method,all,cv");

  WeightReport w;
  w.models = {MotionModelKind::kCv, MotionModelKind::kCtrv};
  w.rows.push_back({MotionModelKind::kCv, 5, {0.75, 0.25}});
  EXPECT_EQ(first_line(weights_to_csv(w, prov())),
            "version,config_hash,seed,regime,count,w_cv,w_ctrv,turning_mass");

  LossCurve curve{{1.5, 0.5}};
  const std::string loss = loss_to_csv({{"hat", curve}}, prov());
  EXPECT_EQ(first_line(loss), "version,config_hash,seed,model,epoch,loss");
  EXPECT_NE(loss.find("hat,1,0.5"), std::string::npos);
}

TEST(Json, ReportsIncludeProvenance) {
  EvalReport report;
  report.rows.push_back({"imm", "all", {1, 0.2, 0.2, 0.0, 0.1}});
  const auto j = eval_to_json(report, prov());
  EXPECT_EQ(j.at("provenance").at("seed"), 42);
  const auto l = latency_to_json(LatencyReport{100, 20, 2.0, 1.0, 3.0}, prov());
  EXPECT_EQ(l.at("provenance").at("version"), "0.1.0");
}

TEST(Files, AtomicWriteAndMissingRead) {
  const fs::path dir = fs::temp_directory_path() / "hat_serialize_test" / "nested";
  fs::remove_all(dir.parent_path());
  write_text_file((dir / "a.txt").string(), "hello\n");
  EXPECT_EQ(read_text_file((dir / "a.txt").string()), "hello\n");
  write_text_file((dir / "a.txt").string(), "bye\n");
  EXPECT_EQ(read_text_file((dir / "a.txt").string()), "bye\n");
  EXPECT_THROW(read_text_file((dir / "b.txt").string()), MissingInputError);
  fs::remove_all(dir.parent_path());
}

}  // namespace
}  // namespace hat
