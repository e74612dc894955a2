//! Content-based recommendations for groups.

mod features;
mod friends;
mod history;
mod scoring;

pub use features::{cosine_similarity, Catalog, FeatureEncoder, GeoPoint, ItemFeatures, DISTANCE_BUCKETS_KM};
pub use friends::{suggest_friends, DEFAULT_FRIEND_SUGGESTIONS};
pub use history::{HistoryEntry, UserHistory};
pub use scoring::{
    group_score, individual_preference, rank_for_group, ContentScorer, GroupScoreWeights, RankFilters, ScoredItem,
    DEFAULT_ALPHA, DEFAULT_LIST_LENGTH, DEFAULT_VARIANCE_WEIGHT,
};
