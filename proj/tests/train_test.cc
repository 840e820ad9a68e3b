#include "dlbac/train.h"

#include <gtest/gtest.h>

#include "dlbac/error.h"
#include "dlbac/metrics.h"
#include "dlbac/synth.h"

namespace dlbac {
namespace {

TEST(LearningRate, DropsTenfoldEveryTenEpochs) {
  const TrainConfig c;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0), 0.001);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 9), 0.001);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 10), 0.0001);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 25), 0.00001);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 59), 0.001 / 1e5);
}

TEST(EarlyStopping, StopsAfterPatienceStaleEpochs) {
  EarlyStopping s(2);
  EXPECT_TRUE(s.observe(0, 1.0));
  EXPECT_TRUE(s.observe(1, 0.5));
  EXPECT_FALSE(s.observe(2, 0.5));  // equal is not an improvement
  EXPECT_FALSE(s.should_stop());
  EXPECT_FALSE(s.observe(3, 0.7));
  EXPECT_TRUE(s.should_stop());
  EXPECT_EQ(s.best_epoch(), 1u);
  EXPECT_DOUBLE_EQ(s.best_loss(), 0.5);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig();
  c.threshold = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig();
  c.class_weights.deny = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig();
  c.val_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

Dataset small_dataset() {
  SynthConfig c;
  c.num_users = c.num_resources = 200;
  c.num_rules = 4;
  c.min_conditions = 2;
  c.max_conditions = 2;
  c.users_per_rule = c.resources_per_rule = 10;
  c.num_ops = 2;
  c.seed = 3;
  return synthesize(c).dataset;
}

TEST(Train, DeterministicAndLearns) {
  const Dataset data = small_dataset();
  const Encoder enc = build_encoder(data, EncodingScheme::kOneHot);
  TrainConfig tc;
  tc.epochs = 15;
  const NetworkConfig nc{enc.width(), {32, 16}, data.num_ops(), 7};
  const TrainResult a = train(init_network(nc), data, enc, tc);
  const TrainResult b = train(init_network(nc), data, enc, tc);
  EXPECT_TRUE(a.network == b.network);
  EXPECT_EQ(a.report.train_loss, b.report.train_loss);
  EXPECT_EQ(a.report.train_loss.size(), a.report.stopped_epoch + 1);
  EXPECT_EQ(a.report.val_loss.size(), a.report.train_loss.size());
  EXPECT_LE(a.report.best_epoch, a.report.stopped_epoch);
  EXPECT_LT(a.report.train_loss.back(), a.report.train_loss.front());
  const MetricsReport m = evaluate(a.network, enc, data);
  ASSERT_TRUE(m.micro_metrics.f1.has_value());
  EXPECT_GT(*m.micro_metrics.f1, 0.9);
}

TEST(Train, RestoresBestEpoch) {
  const Dataset data = small_dataset();
  const Encoder enc = build_encoder(data, EncodingScheme::kOneHot);
  TrainConfig tc;
  tc.epochs = 12;
  tc.early_stop_patience = 2;
  const NetworkConfig nc{enc.width(), {32}, data.num_ops(), 1};
  const TrainResult r = train(init_network(nc), data, enc, tc);
  double best = r.report.val_loss[0];
  for (const double v : r.report.val_loss) best = std::min(best, v);
  EXPECT_DOUBLE_EQ(r.report.val_loss[r.report.best_epoch], best);
  // The monitored loss of the returned network is the best one observed.
  EXPECT_GE(r.report.stopped_epoch - r.report.best_epoch + 1, 1u);
  if (r.report.stopped_epoch + 1 < tc.epochs) {
    EXPECT_EQ(r.report.stopped_epoch - r.report.best_epoch, tc.early_stop_patience);
  }
}

TEST(Train, ShapeChecks) {
  const Dataset data = small_dataset();
  const Encoder enc = build_encoder(data, EncodingScheme::kOneHot);
  const NetworkConfig wrong{enc.width() + 1, {4}, data.num_ops(), 1};
  EXPECT_THROW(train(init_network(wrong), data, enc, TrainConfig()), ShapeError);
  const NetworkConfig ok{enc.width(), {4}, data.num_ops(), 1};
  EXPECT_THROW(train(init_network(ok), Dataset(data.num_user_meta(), data.num_res_meta(),
                                               data.num_ops(), {}),
                     enc, TrainConfig()),
               ShapeError);
}

TEST(ReportCsv, Format) {
  TrainReport r;
  r.train_loss = {0.5, 0.25};
  r.val_loss = {0.4, 0.3};
  r.learning_rate = {0.001, 0.001};
  r.stopped_epoch = 1;
  EXPECT_EQ(report_csv(r),
            "epoch,train_loss,val_loss,learning_rate\n"
            "0,0.500000000,0.400000000,0.001\n"
            "1,0.250000000,0.300000000,0.001\n");
}

TEST(EncodeDataset, ColumnsFollowTuples) {
  const Dataset data = small_dataset();
  const Encoder enc = build_encoder(data, EncodingScheme::kBinary);
  const EncodedData e = encode_dataset(enc, data);
  ASSERT_EQ(static_cast<std::size_t>(e.features.cols()), data.size());
  const auto x = encode_pair(enc, data[5].umeta, data[5].rmeta);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(e.features(static_cast<Eigen::Index>(i), 5), x[i]);
  }
  EXPECT_EQ(e.labels(1, 5), data[5].ops[1]);
}

}  // namespace
}  // namespace dlbac
