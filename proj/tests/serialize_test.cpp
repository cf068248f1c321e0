/*
 * Copyright 2026 The upliftkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uplift/serialize.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

using namespace uplift;
using testutil::TempDir;

namespace {

CateModel fit_small(CateMethod method, const SyntheticData& data,
                    std::uint64_t seed) {
  switch (method) {
    case CateMethod::s: return fit_s(data.frame, LearnerSpec{}, seed);
    case CateMethod::t: return fit_t(data.frame, LearnerSpec{}, seed);
    case CateMethod::x: return fit_x(data.frame, LearnerSpec{}, seed);
    case CateMethod::r: return fit_r(data.frame, LearnerSpec{}, seed);
    case CateMethod::uplift_forest: {
      UpliftForestSpec spec;
      spec.n_trees = 4;
      spec.min_leaf_per_group = 6;
      return fit_uplift_forest(data.frame, spec, seed);
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

TEST(ModelFile, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  const SyntheticData continuous =
      generate_synthetic(Dgp::heterogeneous_linear, 150, 3, 1);
  const SyntheticData binary =
      generate_synthetic(Dgp::binary_logistic, 200, 3, 2);
  for (const auto method : {CateMethod::s, CateMethod::t, CateMethod::x,
                            CateMethod::r, CateMethod::uplift_forest}) {
    const auto& data =
        method == CateMethod::uplift_forest ? binary : continuous;
    const CateModel m = fit_small(method, data, 7);
    const std::string p1 = dir.file("m1_" + to_string(method) + ".json");
    const std::string p2 = dir.file("m2_" + to_string(method) + ".json");
    save_model(m, p1);
    const CateModel loaded = load_model(p1);
    save_model(loaded, p2);
    EXPECT_EQ(testutil::read_file(p1), testutil::read_file(p2))
        << "method " << to_string(method);

    // loaded model predicts identically
    const Eigen::MatrixXd a = predict_cate(m, data.frame.features);
    const Eigen::MatrixXd b = predict_cate(loaded, data.frame.features);
    EXPECT_TRUE(a.isApprox(b, 0.0)) << "method " << to_string(method);
  }
}

TEST(ModelFile, ForestBaseRoundTrips) {
  TempDir dir;
  const SyntheticData data = generate_synthetic(Dgp::heterogeneous_linear, 120, 2, 3);
  LearnerSpec base;
  base.kind = LearnerKind::regression_forest;
  base.forest.n_trees = 3;
  base.forest.max_depth = 3;
  const CateModel m = fit_t(data.frame, base, 5);
  const std::string path = dir.file("forest_base.json");
  save_model(m, path);
  const CateModel loaded = load_model(path);
  EXPECT_TRUE(predict_cate(m, data.frame.features)
                  .isApprox(predict_cate(loaded, data.frame.features), 0.0));
}

TEST(ModelFile, UnknownSchemaVersionRejected) {
  TempDir dir;
  const SyntheticData data = generate_synthetic(Dgp::linear, 60, 2, 4);
  const CateModel m = fit_t(data.frame, LearnerSpec{}, 1);
  json j = model_to_json(m);
  j["schema_version"] = "99";
  const std::string path = dir.file("bad.json");
  testutil::write_file(path, j.dump(2));
  EXPECT_THROW(load_model(path), SchemaError);
}

TEST(ModelFile, MalformedJsonRejected) {
  TempDir dir;
  const std::string path = dir.file("garbage.json");
  testutil::write_file(path, "{not json");
  EXPECT_THROW(load_model(path), SchemaError);
  testutil::write_file(path, "{\"schema_version\": \"1\"}");
  EXPECT_THROW(load_model(path), SchemaError);
}

TEST(ModelFile, ThreadsNeverSerialized) {
  const SyntheticData data = generate_synthetic(Dgp::binary_logistic, 200, 2, 5);
  UpliftForestSpec spec;
  spec.n_trees = 4;
  spec.min_leaf_per_group = 8;
  spec.threads = 1;
  const std::string a = model_to_json(fit_uplift_forest(data.frame, spec, 3)).dump();
  spec.threads = 3;
  const std::string b = model_to_json(fit_uplift_forest(data.frame, spec, 3)).dump();
  EXPECT_EQ(a, b);
}

TEST(Reports, JsonShape) {
  const SyntheticData data = generate_synthetic(Dgp::linear, 150, 2, 6);
  const AteReport r = naive_ate_report(data.frame, 1, 50, 3);
  const json j = report_to_json(r);
  EXPECT_EQ(j.at("arm"), "treated");
  EXPECT_EQ(j.at("method"), "naive");
  EXPECT_EQ(j.at("b"), 50);
  EXPECT_TRUE(j.contains("estimate"));
  EXPECT_TRUE(j.contains("ci_low"));
  EXPECT_TRUE(j.contains("ci_high"));
}
